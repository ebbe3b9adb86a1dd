use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use nsrm_core::data::{load_annotations, read_tensor, AnnotationFormat};
use nsrm_core::eval::{
    decode_keypoints, improvement, pck, PckCurve, ONEHAND10K_THRESHOLDS, PANOPTIC_THRESHOLDS,
};
use nsrm_core::{GridSpec, KeypointSet};
use serde::Serialize;

use crate::commands::synth::kcm_path;
use crate::config::GridArg;
use crate::plot::{line_chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Onehand10k,
    Panoptic,
}

impl Preset {
    pub fn thresholds(self) -> Vec<f64> {
        match self {
            Preset::Onehand10k => ONEHAND10K_THRESHOLDS.to_vec(),
            Preset::Panoptic => PANOPTIC_THRESHOLDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predicted keypoints: an annotation file, or a directory of `<id>.kcm.nsrm` tensors.
    #[arg(long, requires = "gts")]
    pub preds: Option<PathBuf>,
    /// Ground-truth annotation file.
    #[arg(long)]
    pub gts: Option<PathBuf>,
    #[arg(long, default_value = "canonical")]
    pub pred_format: AnnotationFormat,
    #[arg(long, default_value = "canonical")]
    pub gt_format: AnnotationFormat,
    /// Grid used to decode KCM tensors.
    #[arg(long, default_value = "46x46@368")]
    pub grid: GridArg,
    /// Comma-separated normalized thresholds.
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    pub threshold_list: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Precomputed curve (`threshold<TAB>pck` or `threshold<TAB>pck_percent`).
    #[arg(long, conflicts_with_all = ["preds", "values"])]
    pub curve: Option<PathBuf>,
    /// Precomputed PCK values in percent, one per threshold.
    #[arg(long, value_delimiter = ',', conflicts_with = "preds")]
    pub values: Option<Vec<f64>>,
    /// Baseline curve file for the improvement column.
    #[arg(long, conflicts_with = "baseline_values")]
    pub baseline: Option<PathBuf>,
    /// Baseline PCK values in percent.
    #[arg(long, value_delimiter = ',')]
    pub baseline_values: Option<Vec<f64>>,
    #[arg(long, default_value = "result")]
    pub label: String,
    #[arg(long, default_value = "baseline")]
    pub baseline_label: String,
    /// Write the curve as `threshold<TAB>pck`.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Write a PNG line chart of the curve(s).
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
    #[arg(long)]
    pub json_summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Improvement {
    /// Percentage points.
    pub absolute: f64,
    /// Percent of the baseline average.
    pub relative_percent: f64,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub label: String,
    pub curve: PckCurve,
    pub records: Option<usize>,
    pub baseline_label: String,
    pub baseline: Option<PckCurve>,
    pub improvement: Option<Improvement>,
}

fn thresholds(args: &EvalArgs) -> Vec<f64> {
    match (&args.threshold_list, args.preset) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => p.thresholds(),
        (None, None) => ONEHAND10K_THRESHOLDS.to_vec(),
    }
}

fn from_percent(thresholds: Vec<f64>, values: &[f64]) -> Result<PckCurve> {
    Ok(PckCurve::from_values(
        thresholds,
        values.iter().map(|v| v / 100.0).collect(),
    )?)
}

/// Reads a two-column curve table. A header naming `pck_percent` marks percent values.
pub fn read_curve(path: &Path) -> Result<PckCurve> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut percent = false;
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(['\t', ',']).map(str::trim).collect();
        ensure!(
            cols.len() == 2,
            "{}:{}: expected two columns, got {}",
            path.display(),
            i + 1,
            cols.len()
        );
        if cols[0] == "threshold" {
            percent = cols[1] == "pck_percent";
            continue;
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .with_context(|| format!("{}:{}: bad number `{s}`", path.display(), i + 1))
        };
        ts.push(num(cols[0])?);
        vs.push(num(cols[1])?);
    }
    if percent {
        vs.iter_mut().for_each(|v| *v /= 100.0);
    }
    PckCurve::from_values(ts, vs).with_context(|| format!("curve {}", path.display()))
}

pub fn write_curve(path: &Path, curve: &PckCurve) -> Result<()> {
    let mut text = String::from("threshold\tpck\n");
    for (t, v) in curve.thresholds.iter().zip(&curve.values) {
        text.push_str(&format!("{t}\t{v}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_transforms(path: &Path) -> Result<HashMap<String, [f64; 4]>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        ensure!(cols.len() == 5, "{}:{}: expected 5 columns", path.display(), i + 1);
        let mut t = [0.0; 4];
        for (slot, s) in t.iter_mut().zip(&cols[1..]) {
            *slot = s
                .parse()
                .with_context(|| format!("{}:{}: bad number `{s}`", path.display(), i + 1))?;
        }
        out.insert(cols[0].to_string(), t);
    }
    Ok(out)
}

/// Decodes `<id>.kcm.nsrm` for each id. When the directory holds a
/// `transforms.tsv`, keypoints are mapped back to original-image pixels.
fn decode_dir(dir: &Path, ids: &[&str], grid: &GridSpec) -> Result<Vec<KeypointSet>> {
    let tpath = dir.join("transforms.tsv");
    let transforms = if tpath.exists() {
        Some(read_transforms(&tpath)?)
    } else {
        None
    };
    ids.iter()
        .map(|id| {
            let path = kcm_path(dir, id);
            let stack = read_tensor(&path).with_context(|| format!("prediction for image id {id}"))?;
            let kps = decode_keypoints(&stack, grid);
            Ok(match transforms.as_ref().and_then(|t| t.get(*id)) {
                Some(&[ox, oy, sx, sy]) => kps.map_visible(|x, y| (x / sx + ox, y / sy + oy)),
                None => kps,
            })
        })
        .collect()
}

fn evaluate_files(args: &EvalArgs, preds_path: &Path, thresholds: &[f64]) -> Result<(PckCurve, usize)> {
    let gts_path = args.gts.as_ref().context("--gts is required with --preds")?;
    let gts = load_annotations(gts_path, args.gt_format)?;
    let ids: Vec<&str> = gts.iter().map(|r| r.image_id.as_str()).collect();
    let preds: Vec<KeypointSet> = if preds_path.is_dir() {
        let grid = GridSpec::new(
            args.grid.width,
            args.grid.height,
            args.grid.input_size.unwrap_or(368),
        )?;
        decode_dir(preds_path, &ids, &grid)?
    } else {
        let records = load_annotations(preds_path, args.pred_format)?;
        ensure!(
            records.len() == gts.len(),
            "mismatched counts: {} predictions for {} ground-truth records",
            records.len(),
            gts.len()
        );
        let mut by_id: HashMap<&str, &KeypointSet> = HashMap::new();
        for r in &records {
            if by_id.insert(&r.image_id, &r.keypoints).is_some() {
                bail!("duplicate prediction for image id {}", r.image_id);
            }
        }
        ids.iter()
            .map(|id| {
                by_id
                    .get(id)
                    .map(|k| (*k).clone())
                    .with_context(|| format!("no prediction for image id {id}"))
            })
            .collect::<Result<_>>()?
    };
    let gt_sets: Vec<KeypointSet> = gts.iter().map(|r| r.keypoints.clone()).collect();
    let curve = pck(&preds, &gt_sets, thresholds).map_err(|e| match e {
        nsrm_core::Error::DegenerateBox { record } => {
            let id = record.parse::<usize>().ok().and_then(|i| ids.get(i).copied());
            anyhow::anyhow!("degenerate ground-truth box for image id {}", id.unwrap_or(&record))
        }
        other => other.into(),
    })?;
    Ok((curve, gts.len()))
}

fn pct(v: f64) -> String {
    format!("{:>7.2}", v * 100.0)
}

/// The PCK table in percent, with an improvement column when a baseline is present.
pub fn format_table(summary: &EvalSummary) -> String {
    let width = summary.label.len().max(summary.baseline_label.len()).max(8);
    let mut out = format!("{:width$}", "");
    for t in &summary.curve.thresholds {
        out.push_str(&format!("{:>7}", format!("{t}")));
    }
    out.push_str(&format!("{:>7}", "ave"));
    if summary.improvement.is_some() {
        out.push_str("  improvement");
    }
    out.push('\n');
    let row = |label: &str, c: &PckCurve| {
        let mut s = format!("{label:width$}");
        for v in &c.values {
            s.push_str(&pct(*v));
        }
        s.push_str(&pct(c.average));
        s
    };
    if let Some(b) = &summary.baseline {
        out.push_str(&row(&summary.baseline_label, b));
        out.push_str("  -\n");
    }
    out.push_str(&row(&summary.label, &summary.curve));
    if let Some(imp) = &summary.improvement {
        out.push_str("  ");
        out.push_str(&imp.text);
    }
    out.push('\n');
    out
}

pub fn run(args: &EvalArgs) -> Result<EvalSummary> {
    let thresholds = thresholds(args);
    let (curve, records) = match (&args.preds, &args.curve, &args.values) {
        (Some(p), None, None) => {
            let (c, n) = evaluate_files(args, p, &thresholds)?;
            (c, Some(n))
        }
        (None, Some(c), None) => (read_curve(c)?, None),
        (None, None, Some(v)) => (from_percent(thresholds.clone(), v)?, None),
        _ => bail!("give exactly one of --preds, --curve or --values"),
    };
    let baseline = match (&args.baseline, &args.baseline_values) {
        (Some(p), _) => Some(read_curve(p)?),
        (None, Some(v)) => Some(from_percent(curve.thresholds.clone(), v)?),
        (None, None) => None,
    };
    if let Some(b) = &baseline {
        ensure!(
            b.thresholds == curve.thresholds,
            "baseline thresholds {:?} differ from {:?}",
            b.thresholds,
            curve.thresholds
        );
    }
    let improvement = baseline.as_ref().map(|b| {
        let (abs, rel) = improvement(b.average * 100.0, curve.average * 100.0);
        Improvement {
            absolute: abs,
            relative_percent: rel * 100.0,
            text: format!("{abs:+.2} ({:+.2}%)", rel * 100.0),
        }
    });
    let summary = EvalSummary {
        label: args.label.clone(),
        curve,
        records,
        baseline_label: args.baseline_label.clone(),
        baseline,
        improvement,
    };
    print!("{}", format_table(&summary));

    if let Some(p) = &args.curve_out {
        write_curve(p, &summary.curve)?;
    }
    if let Some(p) = &args.plot_out {
        let mut series = Vec::new();
        if let Some(b) = &summary.baseline {
            series.push(Series {
                xs: &b.thresholds,
                ys: &b.values,
                color: [150, 150, 150],
            });
        }
        series.push(Series {
            xs: &summary.curve.thresholds,
            ys: &summary.curve.values,
            color: [30, 90, 200],
        });
        line_chart(&series, 480, 320)
            .save(p)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.json_summary {
        crate::write_json(p, &summary)?;
    }
    Ok(summary)
}
