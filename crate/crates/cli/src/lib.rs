//! `nsrm` command-line tool: batch synthesis of limb masks and keypoint
//! confidence maps, PCK evaluation, tensor rendering, the decayed loss-weight
//! schedule and dataset splitting.

pub mod commands;
pub mod config;
pub mod plot;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{eval, render, schedule, split, synth};

#[derive(Debug, Parser)]
#[command(name = "nsrm", version, about = "Hand-structure ground-truth synthesis and PCK evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write structure and KCM tensors for every annotation record.
    Synth(synth::SynthArgs),
    /// Compute or reprint a PCK table, optionally against a baseline.
    Eval(eval::EvalArgs),
    /// Draw channels of a tensor as an image.
    Render(render::RenderArgs),
    /// Print the per-epoch loss weights.
    Schedule(schedule::ScheduleArgs),
    /// Deterministically split annotations into train/val/test.
    Split(split::SplitArgs),
}

/// Runs a parsed command. `Ok(false)` means some records failed under `--keep-going`.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth(a) => synth::run(&a).map(|s| s.success()),
        Command::Eval(a) => eval::run(&a).map(|_| true),
        Command::Render(a) => render::run(&a).map(|_| true),
        Command::Schedule(a) => schedule::run(&a).map(|_| true),
        Command::Split(a) => split::run(&a).map(|_| true),
    }
}

/// Pretty JSON to `path`, or stdout when `path` is `-`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if path.as_os_str() == "-" {
        println!("{text}");
        return Ok(());
    }
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
