use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use nsrm_core::data::{crop_hand, load_annotations, write_tensor, AnnotationFormat, AnnotationRecord};
use nsrm_core::{KeypointSet, Synthesizer};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigArgs, Preprocess, RunConfig};

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Annotation file to read.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory receiving `<id>.structure.nsrm`, `<id>.kcm.nsrm` and `transforms.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Annotation format (canonical, panoptic, onehand10k).
    #[arg(long)]
    pub format: Option<AnnotationFormat>,
    #[arg(long, value_enum)]
    pub preprocess: Option<Preprocess>,
    /// Worker threads; output is identical for any value.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Skip records that fail instead of aborting.
    #[arg(long)]
    pub keep_going: bool,
    /// Write a JSON summary here (`-` for stdout).
    #[arg(long)]
    pub json_summary: Option<PathBuf>,
    /// Suppress per-record timing lines.
    #[arg(long)]
    pub quiet: bool,
}

/// Maps original-image pixels into the network input: `(p - origin) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub scale_x: f64,
    pub scale_y: f64,
}

pub fn to_input_frame(rec: &AnnotationRecord, cfg: &RunConfig) -> Result<(KeypointSet, InputTransform)> {
    let input = cfg.synthesis.grid.input_size;
    match cfg.preprocess {
        Preprocess::Crop => {
            let crop = crop_hand(rec, cfg.crop_factor, input)?;
            let t = InputTransform {
                origin_x: crop.origin_x,
                origin_y: crop.origin_y,
                scale_x: crop.scale(),
                scale_y: crop.scale(),
            };
            Ok((crop.keypoints, t))
        }
        Preprocess::Resize => {
            if rec.image_width == 0 || rec.image_height == 0 {
                bail!("record {}: image size unknown, cannot resize", rec.image_id);
            }
            let t = InputTransform {
                origin_x: 0.0,
                origin_y: 0.0,
                scale_x: input as f64 / rec.image_width as f64,
                scale_y: input as f64 / rec.image_height as f64,
            };
            Ok((rec.keypoints.map_visible(|x, y| (x * t.scale_x, y * t.scale_y)), t))
        }
        Preprocess::None => Ok((
            rec.keypoints.clone(),
            InputTransform {
                origin_x: 0.0,
                origin_y: 0.0,
                scale_x: 1.0,
                scale_y: 1.0,
            },
        )),
    }
}

/// File-system safe version of an image id.
pub fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn structure_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{}.structure.nsrm", file_stem_for(id)))
}

pub fn kcm_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{}.kcm.nsrm", file_stem_for(id)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub records: usize,
    pub succeeded: usize,
    pub failed: Vec<Failure>,
    pub structure_channels: usize,
    pub kcm_channels: usize,
    pub jobs: usize,
    pub elapsed_seconds: f64,
    pub records_per_second: f64,
}

impl SynthSummary {
    pub fn success(&self) -> bool {
        self.failed.is_empty()
    }
}

struct Outcome {
    transform: Option<InputTransform>,
    millis: f64,
    error: Option<String>,
}

fn process(rec: &AnnotationRecord, cfg: &RunConfig, synth: &Synthesizer, out: &Path) -> Result<InputTransform> {
    let (kps, transform) = to_input_frame(rec, cfg)?;
    let structure = synth
        .structure(&kps)
        .with_context(|| format!("record {}", rec.image_id))?;
    let kcm = synth.kcm(&kps).with_context(|| format!("record {}", rec.image_id))?;
    write_tensor(&structure, &structure_path(out, &rec.image_id))?;
    write_tensor(&kcm, &kcm_path(out, &rec.image_id))?;
    Ok(transform)
}

fn write_transforms(path: &Path, records: &[AnnotationRecord], outcomes: &[Outcome]) -> Result<()> {
    let mut text = String::from("image_id\torigin_x\torigin_y\tscale_x\tscale_y\n");
    for (rec, o) in records.iter().zip(outcomes) {
        if let Some(t) = o.transform {
            text.push_str(&format!(
                "{}\t{:?}\t{:?}\t{:?}\t{:?}\n",
                rec.image_id, t.origin_x, t.origin_y, t.scale_x, t.scale_y
            ));
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: &SynthArgs) -> Result<SynthSummary> {
    let mut cfg = args.config.resolve()?;
    if let Some(f) = args.format {
        cfg.annotation_format = f;
    }
    if let Some(p) = args.preprocess {
        cfg.preprocess = p;
    }
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let records = load_annotations(&args.annotations, cfg.annotation_format)?;
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(file_stem_for(&r.image_id)) {
            bail!("duplicate output name for image id `{}`", r.image_id);
        }
    }
    let synth = Synthesizer::new(cfg.topology(), cfg.scheme, cfg.representation, cfg.synthesis)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let start = Instant::now();
    let outcomes: Vec<Outcome> = pool.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let t0 = Instant::now();
                let res = process(rec, &cfg, &synth, &args.out);
                let millis = t0.elapsed().as_secs_f64() * 1e3;
                match res {
                    Ok(t) => Outcome {
                        transform: Some(t),
                        millis,
                        error: None,
                    },
                    Err(e) => Outcome {
                        transform: None,
                        millis,
                        error: Some(format!("{e:#}")),
                    },
                }
            })
            .collect()
    });
    let elapsed = start.elapsed().as_secs_f64();
    write_transforms(&args.out.join("transforms.tsv"), &records, &outcomes)?;

    let failed: Vec<Failure> = records
        .iter()
        .zip(&outcomes)
        .filter_map(|(r, o)| {
            o.error.as_ref().map(|e| Failure {
                image_id: r.image_id.clone(),
                error: e.clone(),
            })
        })
        .collect();
    if !args.quiet {
        for (r, o) in records.iter().zip(&outcomes) {
            match &o.error {
                None => println!("{}\t{:.3} ms", r.image_id, o.millis),
                Some(e) => println!("{}\tFAILED\t{e}", r.image_id),
            }
        }
    }
    let succeeded = records.len() - failed.len();
    let summary = SynthSummary {
        records: records.len(),
        succeeded,
        failed,
        structure_channels: synth.structure_channels(),
        kcm_channels: synth.keypoint_channels(),
        jobs: args.jobs,
        elapsed_seconds: elapsed,
        records_per_second: if elapsed > 0.0 { succeeded as f64 / elapsed } else { 0.0 },
    };
    println!(
        "synthesized {}/{} records ({} {} {} + {} KCM channels) in {:.3} s, {:.1} records/s",
        summary.succeeded,
        summary.records,
        summary.structure_channels,
        cfg.representation,
        cfg.scheme,
        summary.kcm_channels,
        elapsed,
        summary.records_per_second
    );
    if let Some(p) = &args.json_summary {
        crate::write_json(p, &summary)?;
    }
    if !summary.success() && !args.keep_going {
        let first = &summary.failed[0];
        bail!("record {} failed: {}", first.image_id, first.error);
    }
    Ok(summary)
}
