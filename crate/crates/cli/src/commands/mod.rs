pub mod eval;
pub mod render;
pub mod schedule;
pub mod split;
pub mod synth;
