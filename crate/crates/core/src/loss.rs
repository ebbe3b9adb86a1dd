//! Multi-stage structure and pose losses, their weighted sum, and the
//! decayed weight schedule.
//!
//! Losses are sums over stages, channels and pixels (no averaging). The
//! structure loss is the negative log-likelihood of the ground-truth masks
//! under the predicted per-pixel probabilities, with predictions clamped to
//! `[EPS, 1 - EPS]` before taking logs.
//!
//! Reductions split the flattened input into fixed-size blocks, sum each
//! block sequentially, and combine block sums with a pairwise tree. Block
//! boundaries do not depend on the thread count, so results are bit-identical
//! for any degree of parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handmodel::GroupScheme;
use crate::maps::ChannelStack;
use crate::synthesis::Representation;

/// Clamp applied to structure predictions before taking logs.
pub const EPS: f64 = 1e-7;

const BLOCK: usize = 4096;

/// Predictions for each stage of a cascade, each shaped like the ground truth.
pub type StagePredictions<T> = [ChannelStack<T>];

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn reduce<P, G>(pred: &[P], gt: &[G], term: impl Fn(f64, f64) -> f64 + Sync) -> f64
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    let partials: Vec<f64> = pred
        .par_chunks(BLOCK)
        .zip(gt.par_chunks(BLOCK))
        .map(|(p, g)| {
            p.iter()
                .zip(g)
                .map(|(&p, &g)| term(p.into(), g.into()))
                .sum::<f64>()
        })
        .collect();
    pairwise_sum(&partials)
}

fn check_stages<P: Copy, G: Copy>(preds: &StagePredictions<P>, gt: &ChannelStack<G>) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no prediction stages".into()));
    }
    preds.iter().try_for_each(|p| p.check_shape(gt))
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

fn cross_entropy(pred: f64, target: f64) -> f64 {
    let p = clamp_prob(pred);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

fn cross_entropy_grad(pred: f64, target: f64) -> f64 {
    let p = clamp_prob(pred);
    -target / p + (1.0 - target) / (1.0 - p)
}

fn squared_error(pred: f64, target: f64) -> f64 {
    let r = target - pred;
    r * r
}

/// Summed cross-entropy of every stage's structure prediction against `gt`.
pub fn structure_loss<P, G>(preds: &StagePredictions<P>, gt: &ChannelStack<G>) -> Result<f64>
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    check_stages(preds, gt)?;
    let per_stage: Vec<f64> = preds
        .iter()
        .map(|p| reduce(&p.data, &gt.data, cross_entropy))
        .collect();
    Ok(pairwise_sum(&per_stage))
}

/// Summed squared error of every stage's keypoint heatmaps against `gt`.
pub fn pose_loss<P, G>(preds: &StagePredictions<P>, gt: &ChannelStack<G>) -> Result<f64>
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    check_stages(preds, gt)?;
    let per_stage: Vec<f64> = preds
        .iter()
        .map(|p| reduce(&p.data, &gt.data, squared_error))
        .collect();
    Ok(pairwise_sum(&per_stage))
}

/// A loss value with its gradient with respect to each stage's predictions.
#[derive(Debug, Clone)]
pub struct LossWithGrad {
    pub loss: f64,
    pub grads: Vec<ChannelStack<f64>>,
}

fn gradients<P, G>(
    preds: &StagePredictions<P>,
    gt: &ChannelStack<G>,
    grad: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<ChannelStack<f64>>
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    preds
        .iter()
        .map(|p| {
            let data: Vec<f64> = p
                .data
                .par_iter()
                .zip(gt.data.par_iter())
                .map(|(&p, &g)| grad(p.into(), g.into()))
                .collect();
            ChannelStack {
                channels: p.channels,
                height: p.height,
                width: p.width,
                labels: p.labels.clone(),
                data,
            }
        })
        .collect()
}

/// Structure loss plus `dL/dS_hat`. Inside the clamp the derivative is
/// `-S*/S_hat + (1 - S*)/(1 - S_hat)`; it is evaluated at the clamped value.
pub fn structure_loss_with_grad<P, G>(
    preds: &StagePredictions<P>,
    gt: &ChannelStack<G>,
) -> Result<LossWithGrad>
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    let loss = structure_loss(preds, gt)?;
    Ok(LossWithGrad {
        loss,
        grads: gradients(preds, gt, cross_entropy_grad),
    })
}

/// Pose loss plus `dL/dC_hat = -2 (C* - C_hat)`.
pub fn pose_loss_with_grad<P, G>(
    preds: &StagePredictions<P>,
    gt: &ChannelStack<G>,
) -> Result<LossWithGrad>
where
    P: Copy + Into<f64> + Sync,
    G: Copy + Into<f64> + Sync,
{
    let loss = pose_loss(preds, gt)?;
    Ok(LossWithGrad {
        loss,
        grads: gradients(preds, gt, |p, g| -2.0 * (g - p)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub decay_ratio: f64,
    pub decay_period: u32,
}

impl Default for LossWeights {
    fn default() -> Self {
        default_weights(Representation::Lpm, GroupScheme::G1)
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "decay_ratio must lie in (0, 1], got {}",
                self.decay_ratio
            )));
        }
        if self.decay_period == 0 {
            return Err(Error::Config("decay_period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Starting weights that put structure and pose losses on a similar scale.
pub fn default_weights(repr: Representation, scheme: GroupScheme) -> LossWeights {
    let (lambda1, lambda2) = match (repr, scheme) {
        (Representation::Ldm, GroupScheme::G1And6) => (0.2, 0.04),
        (Representation::Lpm, GroupScheme::G1And6) => (0.1, 0.02),
        (Representation::Ldm, _) => (1.0, 0.0),
        (Representation::Lpm, _) => (0.5, 0.0),
    };
    LossWeights {
        lambda1,
        lambda2,
        decay_ratio: 0.1,
        decay_period: 20,
    }
}

/// Effective `(lambda1, lambda2)` after `decay_ratio^floor(epoch / period)`.
pub fn weights_at_epoch(w: &LossWeights, epoch: u32) -> (f64, f64) {
    let steps = epoch / w.decay_period.max(1);
    let factor = w.decay_ratio.powi(steps as i32);
    (w.lambda1 * factor, w.lambda2 * factor)
}

/// `L_K + lambda1 L_S^G1`, plus `lambda2 L_S^G6` under G1&6.
pub fn total_loss(
    pose: f64,
    struct_g1: f64,
    struct_g6: Option<f64>,
    w: &LossWeights,
    scheme: GroupScheme,
) -> Result<f64> {
    let mismatch = |reason: &str| Error::SchemeMismatch {
        scheme: scheme.to_string(),
        reason: reason.into(),
    };
    match (scheme, struct_g6) {
        (GroupScheme::G1, None) => Ok(pose + w.lambda1 * struct_g1),
        (GroupScheme::G1And6, Some(g6)) => Ok(pose + w.lambda1 * struct_g1 + w.lambda2 * g6),
        (GroupScheme::G1, Some(_)) => Err(mismatch("G6 structure loss given for G1")),
        (GroupScheme::G1And6, None) => Err(mismatch("G6 structure loss missing")),
        (GroupScheme::G6, _) => Err(mismatch("combined loss is defined for G1 and G1AND6")),
    }
}
