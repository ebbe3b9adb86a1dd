use std::fs;
use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use clap::Args;
use nsrm_core::data::{load_annotations, split_dataset, write_canonical, AnnotationFormat, Splits};
use serde::Serialize;

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value = "canonical")]
    pub format: AnnotationFormat,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Receives `train.tsv`, `val.tsv` and `test.tsv` in the canonical format.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub json_summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

pub fn run(args: &SplitArgs) -> Result<Splits> {
    ensure!(
        args.fractions.len() == 3,
        "--fractions takes three values, got {}",
        args.fractions.len()
    );
    let f = (args.fractions[0], args.fractions[1], args.fractions[2]);
    let records = load_annotations(&args.annotations, args.format)?;
    let splits = split_dataset(records, f, args.seed)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (name, part) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        write_canonical(&args.out_dir.join(format!("{name}.tsv")), part)?;
    }
    let summary = SplitSummary {
        seed: args.seed,
        train: splits.train.len(),
        val: splits.val.len(),
        test: splits.test.len(),
    };
    println!(
        "seed {}: train {}, val {}, test {}",
        summary.seed, summary.train, summary.val, summary.test
    );
    if let Some(p) = &args.json_summary {
        crate::write_json(p, &summary)?;
    }
    Ok(splits)
}
