//! Limb mask and keypoint heatmap rasterization on the output grid.
//!
//! Keypoints arrive in input-image pixels and are scaled onto the map grid
//! first. Each limb is rasterized as either a deterministic 0/1 rectangle
//! (LDM) or a probabilistic mask decaying with distance to the limb segment
//! (LPM); limbs are then composed per group with a pointwise maximum.
//! Geometry is evaluated in `f64` and stored as `f32`.
//!
//! A limb with any invisible endpoint rasterizes to the zero map, and so does
//! a heatmap channel for an invisible keypoint.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, PreparedSegment, Segment};
use crate::handmodel::{groups, GroupScheme, HandTopology, Limb, LimbGroup};
use crate::keypoints::KeypointSet;
use crate::maps::{ChannelStack, GridSpec, MaskMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Representation {
    /// Limb deterministic mask.
    Ldm,
    /// Limb probabilistic mask.
    Lpm,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Ldm => "LDM",
            Representation::Lpm => "LPM",
        })
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LDM" => Ok(Representation::Ldm),
            "LPM" => Ok(Representation::Lpm),
            _ => Err(Error::Config(format!("unknown representation `{s}`"))),
        }
    }
}

/// How the LPM exponent uses the point-segment distance `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpmDistanceMode {
    /// `exp(-d / (2 sigma^2))`
    #[default]
    Linear,
    /// `exp(-d^2 / (2 sigma^2))`
    Squared,
}

impl FromStr for LpmDistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(LpmDistanceMode::Linear),
            "squared" => Ok(LpmDistanceMode::Squared),
            _ => Err(Error::Config(format!("unknown LPM distance mode `{s}`"))),
        }
    }
}

/// Widths are in map pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub sigma_ldm: f64,
    pub sigma_lpm: f64,
    pub sigma_kcm: f64,
    pub lpm_distance_mode: LpmDistanceMode,
    pub grid: GridSpec,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            sigma_ldm: 1.0,
            sigma_lpm: 1.0,
            sigma_kcm: 1.0,
            lpm_distance_mode: LpmDistanceMode::Linear,
            grid: GridSpec::default(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_ldm", self.sigma_ldm),
            ("sigma_lpm", self.sigma_lpm),
            ("sigma_kcm", self.sigma_kcm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.grid.validate()
    }
}

/// LPM confidence at point-segment distance `distance`.
pub fn lpm_value(distance: f64, sigma: f64, mode: LpmDistanceMode) -> f64 {
    let d = match mode {
        LpmDistanceMode::Linear => distance,
        LpmDistanceMode::Squared => distance * distance,
    };
    (-d / (2.0 * sigma * sigma)).exp()
}

/// Keypoint heatmap value at squared distance `distance_sq` from the keypoint.
pub fn kcm_value(distance_sq: f64, sigma: f64) -> f64 {
    (-distance_sq / (2.0 * sigma * sigma)).exp()
}

/// Scales visible keypoints from input-image pixels onto the map grid.
pub fn to_map_coords(kps: &KeypointSet, grid: &GridSpec) -> KeypointSet {
    let s = grid.scale();
    kps.map_visible(|x, y| (x * s, y * s))
}

fn check_finite(kps: &KeypointSet) -> Result<()> {
    match kps
        .iter()
        .position(|k| k.visible && !(k.x.is_finite() && k.y.is_finite()))
    {
        Some(i) => Err(Error::NonFiniteKeypoint(i)),
        None => Ok(()),
    }
}

fn limb_segment(kps_map: &KeypointSet, limb: Limb) -> Option<Segment> {
    let a = kps_map.get(limb.parent)?;
    let b = kps_map.get(limb.child)?;
    (a.visible && b.visible).then(|| Segment::new(a.point(), b.point()))
}

fn limb_label(limb: Limb) -> String {
    format!("{}-{}", limb.parent, limb.child)
}

fn rasterize_limb(seg: &Segment, repr: Representation, cfg: &SynthesisConfig, out: &mut [f32]) {
    let prepared = PreparedSegment::new(seg);
    let width = cfg.grid.width;
    for (idx, v) in out.iter_mut().enumerate() {
        let p = Point2::new((idx % width) as f64, (idx / width) as f64);
        *v = match repr {
            Representation::Ldm => {
                if prepared.in_rectangle(p, cfg.sigma_ldm) {
                    1.0
                } else {
                    0.0
                }
            }
            Representation::Lpm => {
                lpm_value(prepared.distance(p), cfg.sigma_lpm, cfg.lpm_distance_mode) as f32
            }
        };
    }
}

fn limb_map(
    kps_map: &KeypointSet,
    limb: Limb,
    repr: Representation,
    cfg: &SynthesisConfig,
) -> Result<MaskMap> {
    cfg.validate()?;
    check_finite(kps_map)?;
    let mut map = MaskMap::zeros(cfg.grid.width, cfg.grid.height, limb_label(limb));
    if let Some(seg) = limb_segment(kps_map, limb) {
        rasterize_limb(&seg, repr, cfg, &mut map.data);
    }
    Ok(map)
}

/// Deterministic mask of one limb; `kps_map` is in map coordinates.
pub fn ldm_limb(kps_map: &KeypointSet, limb: Limb, cfg: &SynthesisConfig) -> Result<MaskMap> {
    limb_map(kps_map, limb, Representation::Ldm, cfg)
}

/// Probabilistic mask of one limb; `kps_map` is in map coordinates.
pub fn lpm_limb(kps_map: &KeypointSet, limb: Limb, cfg: &SynthesisConfig) -> Result<MaskMap> {
    limb_map(kps_map, limb, Representation::Lpm, cfg)
}

/// Pointwise maximum of equally sized maps. The label is taken from the first.
pub fn compose(maps: &[MaskMap]) -> Result<MaskMap> {
    let (first, rest) = maps.split_first().ok_or(Error::EmptyComposition)?;
    let mut out = first.clone();
    for m in rest {
        if m.dims() != out.dims() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", out.height, out.width),
                found: format!("{}x{}", m.height, m.width),
            });
        }
        max_into(&mut out.data, &m.data);
    }
    Ok(out)
}

fn max_into(acc: &mut [f32], src: &[f32]) {
    for (a, &b) in acc.iter_mut().zip(src) {
        if b > *a {
            *a = b;
        }
    }
}

/// Reusable synthesizer for one (topology, scheme, representation, config).
#[derive(Debug, Clone)]
pub struct Synthesizer {
    topology: HandTopology,
    groups: Vec<LimbGroup>,
    repr: Representation,
    cfg: SynthesisConfig,
}

impl Synthesizer {
    pub fn new(
        topology: HandTopology,
        scheme: GroupScheme,
        repr: Representation,
        cfg: SynthesisConfig,
    ) -> Result<Self> {
        topology.validate()?;
        cfg.validate()?;
        let groups = groups(&topology, scheme);
        if let Some(g) = groups.iter().find(|g| g.limb_indices.is_empty()) {
            return Err(Error::Topology(format!("group `{}` has no limbs", g.name)));
        }
        Ok(Self {
            topology,
            groups,
            repr,
            cfg,
        })
    }

    pub fn config(&self) -> &SynthesisConfig {
        &self.cfg
    }

    pub fn groups(&self) -> &[LimbGroup] {
        &self.groups
    }

    pub fn topology(&self) -> &HandTopology {
        &self.topology
    }

    pub fn structure_channels(&self) -> usize {
        self.groups.len()
    }

    pub fn keypoint_channels(&self) -> usize {
        self.topology.keypoint_count
    }

    fn check_keypoints(&self, kps: &KeypointSet) -> Result<()> {
        if kps.len() != self.topology.keypoint_count {
            return Err(Error::ShapeMismatch {
                expected: format!("{} keypoints", self.topology.keypoint_count),
                found: format!("{} keypoints", kps.len()),
            });
        }
        check_finite(kps)
    }

    /// Structure stack into a caller buffer of `groups x H x W` values.
    pub fn structure_into(&self, kps: &KeypointSet, out: &mut [f32]) -> Result<()> {
        self.check_keypoints(kps)?;
        let plane = self.cfg.grid.pixel_count();
        assert_eq!(out.len(), plane * self.groups.len(), "output buffer size");
        let kps_map = to_map_coords(kps, &self.cfg.grid);

        let limb_maps: Vec<Option<Vec<f32>>> = self
            .topology
            .limbs
            .iter()
            .map(|&limb| {
                limb_segment(&kps_map, limb).map(|seg| {
                    let mut buf = vec![0f32; plane];
                    rasterize_limb(&seg, self.repr, &self.cfg, &mut buf);
                    buf
                })
            })
            .collect();

        for (group, dst) in self.groups.iter().zip(out.chunks_exact_mut(plane)) {
            dst.fill(0.0);
            for &li in &group.limb_indices {
                if let Some(m) = &limb_maps[li] {
                    max_into(dst, m);
                }
            }
        }
        Ok(())
    }

    pub fn structure(&self, kps: &KeypointSet) -> Result<ChannelStack> {
        let g = &self.cfg.grid;
        let mut stack = ChannelStack::zeros(self.groups.len(), g.height, g.width);
        self.structure_into(kps, &mut stack.data)?;
        stack.labels = self.groups.iter().map(|g| g.name.clone()).collect();
        Ok(stack)
    }

    /// Keypoint heatmaps into a caller buffer of `keypoints x H x W` values.
    pub fn kcm_into(&self, kps: &KeypointSet, out: &mut [f32]) -> Result<()> {
        self.check_keypoints(kps)?;
        kcm_fill(kps, &self.cfg, out);
        Ok(())
    }

    pub fn kcm(&self, kps: &KeypointSet) -> Result<ChannelStack> {
        self.check_keypoints(kps)?;
        synthesize_kcm(kps, &self.cfg)
    }
}

fn kcm_fill(kps: &KeypointSet, cfg: &SynthesisConfig, out: &mut [f32]) {
    let grid = &cfg.grid;
    let plane = grid.pixel_count();
    assert_eq!(out.len(), plane * kps.len(), "output buffer size");
    let kps_map = to_map_coords(kps, grid);
    for (kp, dst) in kps_map.iter().zip(out.chunks_exact_mut(plane)) {
        if !kp.visible {
            dst.fill(0.0);
            continue;
        }
        let center = kp.point();
        for (idx, v) in dst.iter_mut().enumerate() {
            let p = Point2::new((idx % grid.width) as f64, (idx / grid.width) as f64);
            *v = kcm_value(p.sub(center).norm_sq(), cfg.sigma_kcm) as f32;
        }
    }
}

/// Composed limb masks for `kps` (input-image pixels), one channel per group.
pub fn synthesize_structure(
    kps: &KeypointSet,
    topology: &HandTopology,
    scheme: GroupScheme,
    repr: Representation,
    cfg: &SynthesisConfig,
) -> Result<ChannelStack> {
    Synthesizer::new(topology.clone(), scheme, repr, *cfg)?.structure(kps)
}

/// One Gaussian heatmap per keypoint of `kps` (input-image pixels).
pub fn synthesize_kcm(kps: &KeypointSet, cfg: &SynthesisConfig) -> Result<ChannelStack> {
    cfg.validate()?;
    check_finite(kps)?;
    let g = &cfg.grid;
    let mut stack = ChannelStack::zeros(kps.len(), g.height, g.width);
    kcm_fill(kps, cfg, &mut stack.data);
    Ok(stack)
}
