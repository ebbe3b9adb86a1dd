//! Keypoint decoding and PCK evaluation.
//!
//! PCK is pooled over every visible ground-truth keypoint of every record: a
//! keypoint is correct when its prediction lies within `threshold * D` of the
//! ground truth, where `D` is the larger side of the tightest box around the
//! record's visible ground-truth keypoints. Invisible ground-truth keypoints
//! count neither as correct nor as attempted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::{Keypoint, KeypointSet};
use crate::maps::{ChannelStack, GridSpec};

pub const ONEHAND10K_THRESHOLDS: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];
pub const PANOPTIC_THRESHOLDS: [f64; 5] = [0.04, 0.06, 0.08, 0.1, 0.12];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Larger of width and height.
    pub fn dimension(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }
}

/// Tightest axis-aligned box around the visible keypoints.
pub fn tightest_bbox(kps: &KeypointSet) -> Result<BBox> {
    let mut visible = kps.iter().filter(|k| k.visible);
    let first = visible.next().ok_or(Error::NoVisibleKeypoints)?;
    let init = BBox {
        x_min: first.x,
        y_min: first.y,
        x_max: first.x,
        y_max: first.y,
    };
    Ok(visible.fold(init, |b, k| BBox {
        x_min: b.x_min.min(k.x),
        y_min: b.y_min.min(k.y),
        x_max: b.x_max.max(k.x),
        y_max: b.y_max.max(k.y),
    }))
}

/// Argmax location of each channel, mapped back to input-image pixels.
///
/// Ties resolve to the smallest row-major index. A channel whose values are
/// all zero decodes as invisible.
pub fn decode_keypoints(kcm: &ChannelStack, grid: &GridSpec) -> KeypointSet {
    let scale = grid.scale();
    (0..kcm.channels)
        .map(|c| {
            let plane = kcm.channel(c);
            if plane.iter().all(|&v| v == 0.0) {
                return Keypoint::invisible();
            }
            let mut best = 0;
            for (i, &v) in plane.iter().enumerate() {
                if v > plane[best] {
                    best = i;
                }
            }
            let (row, col) = (best / kcm.width, best % kcm.width);
            Keypoint::visible(col as f64 / scale, row as f64 / scale)
        })
        .collect()
}

fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Thresholds("no thresholds given".into()));
    }
    if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Thresholds(format!("threshold {t} must be positive")));
    }
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Thresholds("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// Correctness probability at each normalized distance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PckCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub average: f64,
}

impl PckCurve {
    /// Builds a curve from already-computed values, e.g. a row of a results table.
    pub fn from_values(thresholds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_thresholds(&thresholds)?;
        if thresholds.len() != values.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", thresholds.len()),
                found: format!("{} values", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Thresholds(format!("PCK value {v} outside [0, 1]")));
        }
        let average = mean(&values);
        Ok(Self {
            thresholds,
            values,
            average,
        })
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pooled PCK of `preds` against `gts` at each threshold.
pub fn pck(preds: &[KeypointSet], gts: &[KeypointSet], thresholds: &[f64]) -> Result<PckCurve> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no records to evaluate".into()));
    }
    if preds.len() != gts.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} predictions", gts.len()),
            found: format!("{} predictions", preds.len()),
        });
    }
    validate_thresholds(thresholds)?;

    // normalized error per counted keypoint; None marks a missing prediction
    let per_record: Vec<Vec<Option<f64>>> = preds
        .par_iter()
        .zip(gts.par_iter())
        .enumerate()
        .map(|(i, (pred, gt))| {
            if pred.len() != gt.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("record {i}: {} keypoints", gt.len()),
                    found: format!("{} keypoints", pred.len()),
                });
            }
            let dim = tightest_bbox(gt)
                .map_err(|_| Error::DegenerateBox {
                    record: i.to_string(),
                })?
                .dimension();
            if !(dim > 0.0) {
                return Err(Error::DegenerateBox {
                    record: i.to_string(),
                });
            }
            Ok(gt
                .iter()
                .zip(pred.iter())
                .filter(|(g, _)| g.visible)
                .map(|(g, p)| {
                    p.visible
                        .then(|| p.point().sub(g.point()).norm() / dim)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let counted: usize = per_record.iter().map(Vec::len).sum();
    if counted == 0 {
        return Err(Error::EmptyInput("no visible ground-truth keypoints".into()));
    }
    let values = thresholds
        .iter()
        .map(|&t| {
            let correct: usize = per_record
                .iter()
                .flatten()
                .filter(|e| matches!(e, Some(err) if *err <= t))
                .count();
            correct as f64 / counted as f64
        })
        .collect();
    PckCurve::from_values(thresholds.to_vec(), values)
}

/// Absolute and relative change of an average, `(new - base, (new - base) / base)`.
pub fn improvement(base_ave: f64, new_ave: f64) -> (f64, f64) {
    let abs = new_ave - base_ave;
    (abs, abs / base_ave)
}

/// Formats an improvement the way result tables print it, e.g. `+3.09 (+4.02%)`,
/// with `base_ave`/`new_ave` given in percent.
pub fn format_improvement(base_ave: f64, new_ave: f64) -> String {
    let (abs, rel) = improvement(base_ave, new_ave);
    format!("{abs:+.2} ({:+.2}%)", rel * 100.0)
}
