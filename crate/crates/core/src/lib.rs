//! Ground-truth synthesis and evaluation for structure-regularized hand pose
//! estimation.
//!
//! Keypoint annotations go in; out come the supervision targets a cascade
//! pose network trains against and the metrics it is judged by:
//!
//! - [`handmodel`]: the 21-keypoint / 20-limb hand skeleton and the limb
//!   groupings (whole hand, palm plus fingers, or both).
//! - [`geometry`]: point-to-segment distance and limb rectangle membership.
//! - [`synthesis`]: deterministic (LDM) and probabilistic (LPM) limb masks,
//!   max-composition per group, and Gaussian keypoint confidence maps.
//! - [`loss`]: structure cross-entropy, pose squared error, their weighted
//!   sum, and the decayed weight schedule.
//! - [`eval`]: argmax decoding and PCK curves normalized by hand box size.
//! - [`data`]: annotation formats, hand cropping, seeded splits and the
//!   `NSRM` binary tensor format.
//! - [`batch`]: contiguous batched synthesis for framework bindings.

pub mod batch;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod handmodel;
pub mod keypoints;
pub mod loss;
pub mod maps;
pub mod synthesis;

pub use error::{Error, Result};
pub use geometry::{Point2, Segment};
pub use handmodel::{default_topology, groups, GroupScheme, HandTopology, Limb, LimbGroup};
pub use keypoints::{Keypoint, KeypointSet};
pub use maps::{ChannelStack, GridSpec, MaskMap};
pub use synthesis::{LpmDistanceMode, Representation, SynthesisConfig, Synthesizer};
