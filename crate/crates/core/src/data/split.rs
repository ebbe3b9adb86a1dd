//! Seeded train/validation/test partitioning.
//!
//! The procedure is fixed so any implementation can reproduce it:
//!
//! 1. Sort records by `image_id`, then `image_path`, then keypoint values.
//! 2. Shuffle with Fisher-Yates from the last index down: for `i = n-1 .. 1`,
//!    draw `r` from [`SplitMix64`] and swap `i` with `j = (r * (i + 1)) >> 64`
//!    (128-bit product).
//! 3. Validation and test take `floor(n * f)` records each; training takes
//!    the remainder. Training is the head of the shuffled list, then
//!    validation, then test.

use std::cmp::Ordering;

use super::AnnotationRecord;
use crate::error::{Error, Result};

/// SplitMix64: state advances by the golden-ratio increment and each output
/// is a fixed mix of the new state, so the `k`th draw depends only on
/// `seed + k * 0x9E3779B97F4A7C15`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..bound` by multiply-shift.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<AnnotationRecord>,
    pub val: Vec<AnnotationRecord>,
    pub test: Vec<AnnotationRecord>,
}

fn record_order(a: &AnnotationRecord, b: &AnnotationRecord) -> Ordering {
    a.image_id
        .cmp(&b.image_id)
        .then_with(|| a.image_path.cmp(&b.image_path))
        .then_with(|| {
            let key = |r: &AnnotationRecord| -> Vec<(u64, u64, bool)> {
                r.keypoints
                    .iter()
                    .map(|k| (k.x.to_bits(), k.y.to_bits(), k.visible))
                    .collect()
            };
            key(a).cmp(&key(b))
        })
}

pub fn split_dataset(
    mut records: Vec<AnnotationRecord>,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<Splits> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || ((ft + fv + fs) - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split fractions must be in [0, 1] and sum to 1, got ({ft}, {fv}, {fs})"
        )));
    }
    records.sort_by(record_order);
    let mut rng = SplitMix64::new(seed);
    for i in (1..records.len()).rev() {
        let j = rng.below(i + 1);
        records.swap(i, j);
    }
    let n = records.len();
    let n_val = (n as f64 * fv).floor() as usize;
    let n_test = (n as f64 * fs).floor() as usize;
    let n_train = n - n_val - n_test;
    let test = records.split_off(n_train + n_val);
    let val = records.split_off(n_train);
    Ok(Splits {
        train: records,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::keypoints::KeypointSet;

    fn records(n: usize) -> Vec<AnnotationRecord> {
        (0..n)
            .map(|i| AnnotationRecord {
                image_id: format!("img{i:05}"),
                image_path: format!("img{i:05}.jpg"),
                image_width: 100,
                image_height: 100,
                keypoints: KeypointSet::all_invisible(21),
            })
            .collect()
    }

    #[test]
    fn splitmix_reference_values() {
        // reference outputs of SplitMix64 seeded with 1234567
        let mut r = SplitMix64::new(1234567);
        assert_eq!(r.next_u64(), 6457827717110365317);
        assert_eq!(r.next_u64(), 3203168211198807973);
        assert_eq!(r.next_u64(), 9817491932198370423);
    }

    #[test]
    fn panoptic_sizes() {
        let s = split_dataset(records(14817), (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (11855, 1481, 1481));
    }

    #[test]
    fn deterministic_partition() {
        let a = split_dataset(records(500), (0.8, 0.1, 0.1), 42).unwrap();
        let b = split_dataset(records(500), (0.8, 0.1, 0.1), 42).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(records(500), (0.8, 0.1, 0.1), 43).unwrap();
        assert_ne!(a, c);

        let ids = |v: &[AnnotationRecord]| v.iter().map(|r| r.image_id.clone()).collect::<BTreeSet<_>>();
        let (tr, va, te) = (ids(&a.train), ids(&a.val), ids(&a.test));
        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        assert_eq!(tr.len() + va.len() + te.len(), 500);
        assert_eq!(&(&tr | &va) | &te, ids(&records(500)));
    }

    #[test]
    fn invariant_to_input_order() {
        let mut shuffled = records(300);
        shuffled.reverse();
        shuffled.swap(3, 170);
        let a = split_dataset(records(300), (0.8, 0.1, 0.1), 9).unwrap();
        let b = split_dataset(shuffled, (0.8, 0.1, 0.1), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_fractions() {
        assert!(split_dataset(records(3), (0.8, 0.1, 0.2), 1).is_err());
        assert!(split_dataset(records(3), (1.1, -0.1, 0.0), 1).is_err());
        let s = split_dataset(vec![], (0.8, 0.1, 0.1), 1).unwrap();
        assert!(s.train.is_empty());
    }
}
