//! Batched synthesis into contiguous `N x C x H x W` buffers.
//!
//! This is the surface host-language bindings wrap: one call fills
//! row-major `f32` arrays that a training framework can adopt without
//! copying. Every element equals the per-record result of
//! [`Synthesizer::structure`] / [`Synthesizer::kcm`] bit for bit, whatever
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{pck, PckCurve};
use crate::handmodel::{GroupScheme, HandTopology};
use crate::keypoints::KeypointSet;
use crate::synthesis::{Representation, SynthesisConfig, Synthesizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRequest {
    /// Input-image pixels.
    pub keypoints: Vec<KeypointSet>,
    pub representation: Representation,
    pub scheme: GroupScheme,
    pub config: SynthesisConfig,
    #[serde(default)]
    pub topology: HandTopology,
}

/// Row-major `f32` array with shape `[n, channels, height, width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTensor {
    pub shape: [usize; 4],
    pub data: Vec<f32>,
}

impl BatchTensor {
    fn zeros(shape: [usize; 4]) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Values of record `i`, shaped `[channels, height, width]`.
    pub fn record(&self, i: usize) -> &[f32] {
        let n = self.shape[1] * self.shape[2] * self.shape[3];
        &self.data[i * n..(i + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub structure: BatchTensor,
    pub kcm: BatchTensor,
}

pub fn batch_synthesize(req: &BatchRequest) -> Result<BatchOutput> {
    let synth = Synthesizer::new(
        req.topology.clone(),
        req.scheme,
        req.representation,
        req.config,
    )?;
    let grid = req.config.grid;
    let n = req.keypoints.len();
    let mut structure = BatchTensor::zeros([n, synth.structure_channels(), grid.height, grid.width]);
    let mut kcm = BatchTensor::zeros([n, synth.keypoint_channels(), grid.height, grid.width]);
    if n == 0 {
        return Ok(BatchOutput { structure, kcm });
    }
    let s_len = structure.data.len() / n;
    let k_len = kcm.data.len() / n;
    structure
        .data
        .par_chunks_mut(s_len)
        .zip(kcm.data.par_chunks_mut(k_len))
        .zip(req.keypoints.par_iter())
        .try_for_each(|((s, k), kps)| {
            synth.structure_into(kps, s)?;
            synth.kcm_into(kps, k)
        })?;
    Ok(BatchOutput { structure, kcm })
}

pub fn batch_pck(preds: &[KeypointSet], gts: &[KeypointSet], thresholds: &[f64]) -> Result<PckCurve> {
    pck(preds, gts, thresholds)
}
