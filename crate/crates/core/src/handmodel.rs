//! Hand skeleton topology and anatomical limb groupings.
//!
//! The canonical hand has 21 keypoints: id 0 is the wrist, then four points
//! per finger ordered base to tip, fingers ordered thumb to little:
//!
//! ```text
//! 0 wrist | 1-4 thumb | 5-8 index | 9-12 middle | 13-16 ring | 17-20 little
//! ```
//!
//! Limbs are the parent-child pairs along each finger chain starting at the
//! wrist, so every finger contributes a wrist-to-base limb plus three
//! phalangeal limbs. The topology is plain data and can be loaded from a
//! config file to drive the same engine with a different skeleton.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KEYPOINT_COUNT: usize = 21;
pub const LIMB_COUNT: usize = 20;
pub const WRIST: usize = 0;

const FINGER_NAMES: [&str; 5] = ["thumb", "index", "middle", "ring", "little"];

/// A limb connects a parent keypoint to a child keypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Limb {
    pub parent: usize,
    pub child: usize,
}

impl Limb {
    pub const fn new(parent: usize, child: usize) -> Self {
        Self { parent, child }
    }
}

/// An ordered run of keypoints hanging off the root, e.g. one finger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub name: String,
    pub keypoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandTopology {
    pub keypoint_count: usize,
    #[serde(default)]
    pub root: usize,
    pub limbs: Vec<Limb>,
    /// Chains in order; each starts at a child of `root`.
    pub finger_chains: Vec<Chain>,
}

impl Default for HandTopology {
    fn default() -> Self {
        default_topology()
    }
}

pub fn default_topology() -> HandTopology {
    let finger_chains: Vec<Chain> = FINGER_NAMES
        .iter()
        .enumerate()
        .map(|(f, name)| Chain {
            name: (*name).to_string(),
            keypoints: (1 + 4 * f..5 + 4 * f).collect(),
        })
        .collect();
    let mut limbs = Vec::with_capacity(LIMB_COUNT);
    for chain in &finger_chains {
        let mut parent = WRIST;
        for &child in &chain.keypoints {
            limbs.push(Limb::new(parent, child));
            parent = child;
        }
    }
    HandTopology {
        keypoint_count: KEYPOINT_COUNT,
        root: WRIST,
        limbs,
        finger_chains,
    }
}

impl HandTopology {
    /// Checks that the limbs form a tree rooted at `root` and that each chain
    /// walks existing limbs outward from the root.
    pub fn validate(&self) -> Result<()> {
        let n = self.keypoint_count;
        let bad = |m: String| Err(Error::Topology(m));
        if n == 0 {
            return bad("keypoint_count must be positive".into());
        }
        if self.root >= n {
            return bad(format!("root {} out of range", self.root));
        }
        if self.limbs.len() + 1 != n {
            return bad(format!(
                "{} keypoints need {} limbs, found {}",
                n,
                n - 1,
                self.limbs.len()
            ));
        }
        let mut parent_of = vec![None; n];
        for (i, limb) in self.limbs.iter().enumerate() {
            if limb.parent >= n || limb.child >= n {
                return bad(format!("limb {i} references a keypoint out of range"));
            }
            if limb.parent == limb.child {
                return bad(format!("limb {i} joins keypoint {} to itself", limb.child));
            }
            if limb.child == self.root {
                return bad(format!("limb {i} has the root as its child"));
            }
            if parent_of[limb.child].replace(limb.parent).is_some() {
                return bad(format!("keypoint {} is the child of two limbs", limb.child));
            }
        }
        // n-1 distinct children plus the root: every node has one parent. A
        // cycle would never reach the root.
        for start in 0..n {
            let mut node = start;
            let mut steps = 0;
            while node != self.root {
                node = parent_of[node].expect("every non-root keypoint has a parent");
                steps += 1;
                if steps > n {
                    return bad(format!("keypoint {start} is not connected to the root"));
                }
            }
        }
        for chain in &self.finger_chains {
            if chain.keypoints.is_empty() {
                return bad(format!("chain `{}` is empty", chain.name));
            }
            let mut parent = self.root;
            for &kp in &chain.keypoints {
                if kp >= n || parent_of[kp] != Some(parent) {
                    return bad(format!(
                        "chain `{}`: no limb from {parent} to {kp}",
                        chain.name
                    ));
                }
                parent = kp;
            }
        }
        Ok(())
    }

    pub fn limb_index(&self, parent: usize, child: usize) -> Option<usize> {
        self.limbs
            .iter()
            .position(|l| l.parent == parent && l.child == child)
    }

    /// Number of limbs touching keypoint `id`.
    pub fn degree(&self, id: usize) -> usize {
        self.limbs
            .iter()
            .filter(|l| l.parent == id || l.child == id)
            .count()
    }
}

/// Named subset of limbs whose masks are composed into one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimbGroup {
    pub name: String,
    pub limb_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GroupScheme {
    /// All limbs in one whole-hand mask.
    G1,
    /// Palm plus one group per finger.
    G6,
    /// G1's channel followed by G6's six.
    G1And6,
}

impl GroupScheme {
    pub fn channel_count(self) -> usize {
        match self {
            GroupScheme::G1 => 1,
            GroupScheme::G6 => 6,
            GroupScheme::G1And6 => 7,
        }
    }
}

impl fmt::Display for GroupScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupScheme::G1 => "G1",
            GroupScheme::G6 => "G6",
            GroupScheme::G1And6 => "G1AND6",
        })
    }
}

impl FromStr for GroupScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(GroupScheme::G1),
            "G6" => Ok(GroupScheme::G6),
            "G1AND6" | "G1&6" | "G16" => Ok(GroupScheme::G1And6),
            _ => Err(Error::Config(format!("unknown group scheme `{s}`"))),
        }
    }
}

fn whole_hand(topology: &HandTopology) -> LimbGroup {
    LimbGroup {
        name: "hand".into(),
        limb_indices: (0..topology.limbs.len()).collect(),
    }
}

/// Palm holds the root-to-chain-base limbs; each chain group holds the rest.
fn palm_and_fingers(topology: &HandTopology) -> Vec<LimbGroup> {
    let mut palm = Vec::new();
    let mut fingers = Vec::with_capacity(topology.finger_chains.len());
    for chain in &topology.finger_chains {
        let mut parent = topology.root;
        let mut limbs = Vec::new();
        for &kp in &chain.keypoints {
            let idx = topology
                .limb_index(parent, kp)
                .expect("chains follow limbs in a validated topology");
            if parent == topology.root {
                palm.push(idx);
            } else {
                limbs.push(idx);
            }
            parent = kp;
        }
        fingers.push(LimbGroup {
            name: chain.name.clone(),
            limb_indices: limbs,
        });
    }
    let mut groups = Vec::with_capacity(fingers.len() + 1);
    groups.push(LimbGroup {
        name: "palm".into(),
        limb_indices: palm,
    });
    groups.extend(fingers);
    groups
}

/// Limb groups for `scheme`, in channel order.
pub fn groups(topology: &HandTopology, scheme: GroupScheme) -> Vec<LimbGroup> {
    match scheme {
        GroupScheme::G1 => vec![whole_hand(topology)],
        GroupScheme::G6 => palm_and_fingers(topology),
        GroupScheme::G1And6 => {
            let mut all = vec![whole_hand(topology)];
            all.extend(palm_and_fingers(topology));
            all
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    #[test]
    fn default_topology_shape() {
        let topo = default_topology();
        topo.validate().unwrap();
        assert_eq!(topo.keypoint_count, 21);
        assert_eq!(topo.limbs.len(), 20);
        assert_eq!(topo.degree(WRIST), 5);
        assert_eq!(topo.limbs[0], Limb::new(0, 1));
        assert_eq!(topo.limbs[3], Limb::new(3, 4));
        assert_eq!(topo.limbs[4], Limb::new(0, 5));
        assert_eq!(topo.limbs[19], Limb::new(19, 20));
        assert_eq!(default_topology(), topo);
    }

    #[test]
    fn each_chain_contributes_four_limbs() {
        let topo = default_topology();
        for chain in &topo.finger_chains {
            let touching = topo
                .limbs
                .iter()
                .filter(|l| chain.keypoints.contains(&l.child))
                .count();
            assert_eq!(touching, 4, "{}", chain.name);
        }
    }

    #[test]
    fn every_non_wrist_keypoint_is_a_child_once() {
        let topo = default_topology();
        for id in 1..21 {
            assert_eq!(topo.limbs.iter().filter(|l| l.child == id).count(), 1);
        }
    }

    #[test]
    fn scheme_group_counts() {
        let topo = default_topology();
        let g1 = groups(&topo, GroupScheme::G1);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1[0].limb_indices.len(), 20);

        let g6 = groups(&topo, GroupScheme::G6);
        let sizes: Vec<_> = g6.iter().map(|g| g.limb_indices.len()).collect();
        assert_eq!(sizes, vec![5, 3, 3, 3, 3, 3]);
        assert_eq!(g6[0].name, "palm");

        let both = groups(&topo, GroupScheme::G1And6);
        assert_eq!(both.len(), 7);
        assert_eq!(both[0], g1[0]);
        assert_eq!(&both[1..], &g6[..]);
    }

    #[test]
    fn g6_partitions_limbs() {
        let topo = default_topology();
        let g6 = groups(&topo, GroupScheme::G6);
        let mut seen = BTreeSet::new();
        for g in &g6 {
            for &i in &g.limb_indices {
                assert!(seen.insert(i), "limb {i} in two groups");
            }
        }
        assert_eq!(seen, (0..20).collect());
    }

    #[test]
    fn palm_is_wrist_limbs() {
        let topo = default_topology();
        let palm = &groups(&topo, GroupScheme::G6)[0];
        for &i in &palm.limb_indices {
            assert_eq!(topo.limbs[i].parent, WRIST);
        }
    }

    #[test]
    fn rejects_broken_topologies() {
        let mut t = default_topology();
        t.limbs.pop();
        assert!(t.validate().is_err());

        let mut t = default_topology();
        t.limbs[5] = Limb::new(6, 6);
        assert!(t.validate().is_err());

        let mut t = default_topology();
        t.limbs[7] = Limb::new(2, 6);
        assert!(t.validate().is_err());

        let mut t = default_topology();
        t.limbs[2] = Limb::new(4, 3);
        t.limbs[3] = Limb::new(3, 4);
        assert!(t.validate().is_err());

        let mut t = default_topology();
        t.finger_chains[0].keypoints = vec![1, 3];
        assert!(t.validate().is_err());
    }

    #[test]
    fn topology_serde_round_trip() {
        let topo = default_topology();
        let json = serde_json::to_string(&topo).unwrap();
        let back: HandTopology = serde_json::from_str(&json).unwrap();
        assert_eq!(back, topo);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("g1&6".parse::<GroupScheme>().unwrap(), GroupScheme::G1And6);
        assert_eq!("G6".parse::<GroupScheme>().unwrap(), GroupScheme::G6);
        assert!("G7".parse::<GroupScheme>().is_err());
    }
}
