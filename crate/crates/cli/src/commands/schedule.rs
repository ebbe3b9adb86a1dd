use anyhow::{bail, Result};
use clap::Args;
use nsrm_core::loss::{weights_at_epoch, LossWeights};

use crate::config::ConfigArgs;

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of epochs to print, starting at 0.
    #[arg(long)]
    pub epochs: u32,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub decay_ratio: Option<f64>,
    #[arg(long)]
    pub decay_period: Option<u32>,
}

pub fn resolve_weights(args: &ScheduleArgs) -> Result<LossWeights> {
    let mut w = args.config.resolve()?.loss_weights();
    if let Some(v) = args.lambda1 {
        w.lambda1 = v;
    }
    if let Some(v) = args.lambda2 {
        w.lambda2 = v;
    }
    if let Some(v) = args.decay_ratio {
        w.decay_ratio = v;
    }
    if let Some(v) = args.decay_period {
        w.decay_period = v;
    }
    w.validate()?;
    Ok(w)
}

/// `epoch\tlambda1\tlambda2` rows for epochs `0..epochs`.
pub fn table(w: &LossWeights, epochs: u32) -> String {
    let mut out = String::from("epoch\tlambda1\tlambda2\n");
    for e in 0..epochs {
        let (l1, l2) = weights_at_epoch(w, e);
        out.push_str(&format!("{e}\t{l1:?}\t{l2:?}\n"));
    }
    out
}

pub fn run(args: &ScheduleArgs) -> Result<()> {
    if args.epochs == 0 {
        bail!("--epochs must be at least 1");
    }
    let w = resolve_weights(args)?;
    print!("{}", table(&w, args.epochs));
    Ok(())
}
