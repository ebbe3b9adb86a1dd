use serde::{Deserialize, Serialize};

use super::AnnotationRecord;
use crate::error::{Error, Result};
use crate::eval::tightest_bbox;
use crate::keypoints::KeypointSet;

pub const DEFAULT_CROP_FACTOR: f64 = 2.2;

/// Square hand patch in original-image pixels and the keypoints mapped into
/// the resized patch (`input_size` pixels a side).
///
/// The transform is `patch = (orig - origin) * input_size / side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropResult {
    pub origin_x: f64,
    pub origin_y: f64,
    pub side: f64,
    pub input_size: usize,
    pub keypoints: KeypointSet,
}

impl CropResult {
    /// Patch pixels per original pixel.
    pub fn scale(&self) -> f64 {
        self.input_size as f64 / self.side
    }

    pub fn to_patch(&self, x: f64, y: f64) -> (f64, f64) {
        let s = self.scale();
        ((x - self.origin_x) * s, (y - self.origin_y) * s)
    }

    pub fn to_original(&self, u: f64, v: f64) -> (f64, f64) {
        let s = self.side / self.input_size as f64;
        (u * s + self.origin_x, v * s + self.origin_y)
    }

    pub fn keypoints_to_original(&self, kps: &KeypointSet) -> KeypointSet {
        kps.map_visible(|u, v| self.to_original(u, v))
    }

    /// Nearest-neighbour resample of an interleaved `width x height x channels`
    /// image into the `input_size` square patch. Samples outside the source
    /// image are zero.
    pub fn sample_patch<T: Copy + Default>(
        &self,
        src: &[T],
        width: usize,
        height: usize,
        channels: usize,
    ) -> Vec<T> {
        assert_eq!(src.len(), width * height * channels, "source buffer size");
        let n = self.input_size;
        let mut out = vec![T::default(); n * n * channels];
        for v in 0..n {
            for u in 0..n {
                // sample at the patch pixel centre
                let (x, y) = self.to_original(u as f64 + 0.5, v as f64 + 0.5);
                let (x, y) = (x.floor(), y.floor());
                if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
                    continue;
                }
                let s = (y as usize * width + x as usize) * channels;
                let d = (v * n + u) * channels;
                out[d..d + channels].copy_from_slice(&src[s..s + channels]);
            }
        }
        out
    }
}

/// Crops a square of `factor * B` around the keypoint box centre, where `B`
/// is the larger side of the tightest box around the visible keypoints.
pub fn crop_hand(rec: &AnnotationRecord, factor: f64, input_size: usize) -> Result<CropResult> {
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::Config(format!("crop factor must exceed 1, got {factor}")));
    }
    if input_size == 0 {
        return Err(Error::Config("input_size must be positive".into()));
    }
    let degenerate = || Error::DegenerateBox {
        record: rec.image_id.clone(),
    };
    let bbox = tightest_bbox(&rec.keypoints).map_err(|_| degenerate())?;
    let dim = bbox.dimension();
    if !(dim > 0.0) {
        return Err(degenerate());
    }
    let side = factor * dim;
    let (cx, cy) = bbox.center();
    let mut crop = CropResult {
        origin_x: cx - side / 2.0,
        origin_y: cy - side / 2.0,
        side,
        input_size,
        keypoints: KeypointSet::default(),
    };
    crop.keypoints = rec.keypoints.map_visible(|x, y| crop.to_patch(x, y));
    Ok(crop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::Keypoint;

    fn record(points: &[(f64, f64)]) -> AnnotationRecord {
        AnnotationRecord {
            image_id: "r".into(),
            image_path: "r.jpg".into(),
            image_width: 640,
            image_height: 480,
            keypoints: points.iter().map(|&(x, y)| Keypoint::visible(x, y)).collect(),
        }
    }

    #[test]
    fn crop_geometry() {
        let rec = record(&[(0.0, 0.0), (100.0, 50.0), (50.0, 25.0)]);
        let c = crop_hand(&rec, 2.2, 368).unwrap();
        assert!((c.side - 220.0).abs() < 1e-12);
        assert!((c.origin_x - -60.0).abs() < 1e-12);
        assert!((c.origin_y - -85.0).abs() < 1e-12);
        let centre = c.keypoints[2];
        assert!((centre.x - 184.0).abs() < 1e-9 && (centre.y - 184.0).abs() < 1e-9);
    }

    #[test]
    fn crop_inverse_round_trip() {
        let rec = record(&[(12.3, 400.1), (250.7, 30.9), (99.9, 101.2)]);
        let c = crop_hand(&rec, 2.2, 368).unwrap();
        let back = c.keypoints_to_original(&c.keypoints);
        for (a, b) in back.iter().zip(rec.keypoints.iter()) {
            assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        }
    }

    #[test]
    fn crop_errors_and_visibility() {
        assert!(crop_hand(&record(&[(3.0, 3.0)]), 2.2, 368).is_err());
        assert!(crop_hand(&record(&[(3.0, 3.0), (3.0, 3.0)]), 2.2, 368).is_err());
        assert!(crop_hand(&record(&[(0.0, 0.0), (5.0, 3.0)]), 1.0, 368).is_err());
        let mut rec = record(&[(0.0, 0.0), (5.0, 3.0), (9.0, 9.0)]);
        rec.keypoints.0[2] = Keypoint::invisible();
        let c = crop_hand(&rec, 2.2, 368).unwrap();
        assert!(!c.keypoints[2].visible);
        assert!((c.side - 11.0).abs() < 1e-12);
    }

    #[test]
    fn patch_sampling_zero_pads() {
        // 4x4 single-channel image, hand in the top-left corner
        let img: Vec<u8> = (1..=16).collect();
        let rec = record(&[(0.0, 0.0), (2.0, 2.0)]);
        let c = crop_hand(&rec, 2.0, 4).unwrap();
        // side 4 centred at (1,1): origin (-1,-1), unit scale
        let patch = c.sample_patch(&img, 4, 4, 1);
        assert_eq!(patch[0], 0);
        assert_eq!(patch[5], 1);
        assert_eq!(patch[15], 11);
    }
}
