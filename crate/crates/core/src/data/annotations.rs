//! Annotation records and their on-disk formats.
//!
//! The canonical format is tab-separated text. The first line declares the
//! format and keypoint count, the second names the columns, and every further
//! non-empty line is one record:
//!
//! ```text
//! #nsrm-annotations v1 keypoints=21
//! image_id  image_path  image_width  image_height  x0  y0  v0  ...  x20  y20  v20
//! ```
//!
//! `v` is `1` for an annotated keypoint and `0` otherwise. Coordinates are
//! written in Rust's shortest round-trip float form, so write then read is the
//! identity. Lines starting with `#` after the header are comments.
//!
//! Adapters:
//!
//! - [`AnnotationFormat::PanopticHands`]: JSON, either `{"root": [...]}` or a
//!   bare array of objects with `img_paths`, optional `img_width`/`img_height`,
//!   and `joint_self` as 21 `[x, y, v]` triples (`v > 0` means annotated). The
//!   image id is the file stem of `img_paths`; repeated stems get `_1`, `_2`...
//! - [`AnnotationFormat::OneHand10k`]: comma-separated lines
//!   `name,width,height,x1,y1,...,x21,y21` (or without width/height). Negative
//!   coordinates mark unannotated keypoints. The image id is the file stem.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handmodel::KEYPOINT_COUNT;
use crate::keypoints::{Keypoint, KeypointSet};

const CANONICAL_MAGIC: &str = "#nsrm-annotations";
const CANONICAL_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub image_path: String,
    pub image_width: u32,
    pub image_height: u32,
    /// Original-image pixels.
    pub keypoints: KeypointSet,
}

impl AnnotationRecord {
    /// Ids of visible keypoints outside the image, when the size is known.
    pub fn out_of_frame(&self) -> Vec<usize> {
        if self.image_width == 0 || self.image_height == 0 {
            return Vec::new();
        }
        let (w, h) = (self.image_width as f64, self.image_height as f64);
        self.keypoints
            .iter()
            .enumerate()
            .filter(|(_, k)| k.visible && !((0.0..=w).contains(&k.x) && (0.0..=h).contains(&k.y)))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationFormat {
    #[serde(rename = "canonical")]
    Canonical,
    #[serde(rename = "panoptic")]
    PanopticHands,
    #[serde(rename = "onehand10k")]
    OneHand10k,
}

impl FromStr for AnnotationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "canonical" => Ok(AnnotationFormat::Canonical),
            "panoptic" | "panoptichands" => Ok(AnnotationFormat::PanopticHands),
            "onehand10k" => Ok(AnnotationFormat::OneHand10k),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

pub fn load_annotations(path: &Path, format: AnnotationFormat) -> Result<Vec<AnnotationRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    match format {
        AnnotationFormat::Canonical => parse_canonical(&text, path),
        AnnotationFormat::PanopticHands => parse_panoptic(&text, path),
        AnnotationFormat::OneHand10k => parse_onehand10k(&text, path),
    }
}

pub fn read_canonical(path: &Path) -> Result<Vec<AnnotationRecord>> {
    load_annotations(path, AnnotationFormat::Canonical)
}

pub fn write_canonical(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    fs::write(path, canonical_string(records)?)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn canonical_string(records: &[AnnotationRecord]) -> Result<String> {
    let count = records.first().map_or(KEYPOINT_COUNT, |r| r.keypoints.len());
    let mut out = format!("{CANONICAL_MAGIC} {CANONICAL_VERSION} keypoints={count}\n");
    out.push_str("image_id\timage_path\timage_width\timage_height");
    for k in 0..count {
        write!(out, "\tx{k}\ty{k}\tv{k}").unwrap();
    }
    out.push('\n');
    for rec in records {
        if rec.keypoints.len() != count {
            return Err(Error::ShapeMismatch {
                expected: format!("{count} keypoints"),
                found: format!("{} keypoints in record {}", rec.keypoints.len(), rec.image_id),
            });
        }
        for field in [&rec.image_id, &rec.image_path] {
            if field.is_empty() || field.contains(['\t', '\n', '\r']) {
                return Err(Error::Config(format!(
                    "record {}: id and path must be non-empty and free of tabs/newlines",
                    rec.image_id
                )));
            }
        }
        write!(
            out,
            "{}\t{}\t{}\t{}",
            rec.image_id, rec.image_path, rec.image_width, rec.image_height
        )
        .unwrap();
        for k in rec.keypoints.iter() {
            write!(out, "\t{:?}\t{:?}\t{}", k.x, k.y, u8::from(k.visible)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

struct LineCtx<'a> {
    path: &'a Path,
    line: usize,
    record: String,
}

impl LineCtx<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            record: self.record.clone(),
            message: message.into(),
        }
    }

    fn num<T: FromStr>(&self, field: &str, what: &str) -> Result<T> {
        field
            .trim()
            .parse()
            .map_err(|_| self.err(format!("malformed {what} `{field}`")))
    }
}

fn parse_canonical(text: &str, path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut lines = text.lines().enumerate();
    let header_err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        record: "<header>".into(),
        message: msg.into(),
    };
    let (_, first) = lines.next().ok_or_else(|| header_err(1, "empty file"))?;
    let mut parts = first.split_whitespace();
    if parts.next() != Some(CANONICAL_MAGIC) {
        return Err(header_err(1, "missing `#nsrm-annotations` header"));
    }
    if parts.next() != Some(CANONICAL_VERSION) {
        return Err(header_err(1, "unsupported annotation version"));
    }
    let count: usize = parts
        .next()
        .and_then(|p| p.strip_prefix("keypoints="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| header_err(1, "missing `keypoints=N`"))?;
    match lines.next() {
        Some((_, cols)) if cols.starts_with("image_id\t") => {}
        _ => return Err(header_err(2, "missing column header line")),
    }

    let expected_fields = 4 + 3 * count;
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let ctx = LineCtx {
            path,
            line: idx + 1,
            record: fields[0].to_string(),
        };
        if fields.len() != expected_fields {
            return Err(ctx.err(format!(
                "expected {expected_fields} fields, found {}",
                fields.len()
            )));
        }
        let mut kps = Vec::with_capacity(count);
        for k in 0..count {
            let f = &fields[4 + 3 * k..7 + 3 * k];
            let visible = match f[2].trim() {
                "1" => true,
                "0" => false,
                other => return Err(ctx.err(format!("keypoint {k}: bad visibility `{other}`"))),
            };
            let x: f64 = ctx.num(f[0], &format!("x of keypoint {k}"))?;
            let y: f64 = ctx.num(f[1], &format!("y of keypoint {k}"))?;
            if visible && !(x.is_finite() && y.is_finite()) {
                return Err(ctx.err(format!("keypoint {k}: non-finite coordinate")));
            }
            kps.push(Keypoint { x, y, visible });
        }
        records.push(AnnotationRecord {
            image_id: fields[0].to_string(),
            image_path: fields[1].to_string(),
            image_width: ctx.num(fields[2], "image_width")?,
            image_height: ctx.num(fields[3], "image_height")?,
            keypoints: KeypointSet::new(kps),
        });
    }
    Ok(records)
}

fn file_stem(p: &str) -> String {
    Path::new(p)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.to_string())
}

/// Suffixes repeated ids with `_1`, `_2`, ... in file order.
fn dedupe_ids(records: &mut [AnnotationRecord]) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for r in records.iter_mut() {
        let n = seen.entry(r.image_id.clone()).or_insert(0);
        if *n > 0 {
            r.image_id = format!("{}_{}", r.image_id, n);
        }
        *n += 1;
    }
}

#[derive(Deserialize)]
struct PanopticEntry {
    img_paths: String,
    #[serde(default)]
    img_width: Option<f64>,
    #[serde(default)]
    img_height: Option<f64>,
    joint_self: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PanopticFile {
    Rooted { root: Vec<serde_json::Value> },
    Bare(Vec<serde_json::Value>),
}

fn parse_panoptic(text: &str, path: &Path) -> Result<Vec<AnnotationRecord>> {
    let file: PanopticFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        record: "<file>".into(),
        message: e.to_string(),
    })?;
    let entries = match file {
        PanopticFile::Rooted { root } => root,
        PanopticFile::Bare(v) => v,
    };
    let mut records = Vec::with_capacity(entries.len());
    for (i, value) in entries.into_iter().enumerate() {
        let id_hint = value
            .get("img_paths")
            .and_then(|v| v.as_str())
            .map(file_stem)
            .unwrap_or_else(|| format!("#{i}"));
        // JSON has no line structure per entry; report the entry index
        let ctx = LineCtx {
            path,
            line: i + 1,
            record: id_hint,
        };
        let entry: PanopticEntry =
            serde_json::from_value(value).map_err(|e| ctx.err(e.to_string()))?;
        if entry.joint_self.len() != KEYPOINT_COUNT {
            return Err(ctx.err(format!(
                "expected {KEYPOINT_COUNT} joints, found {}",
                entry.joint_self.len()
            )));
        }
        let mut kps = Vec::with_capacity(KEYPOINT_COUNT);
        for (k, j) in entry.joint_self.iter().enumerate() {
            if j.len() < 2 {
                return Err(ctx.err(format!("joint {k} needs at least x and y")));
            }
            let annotated = j.get(2).is_none_or(|&v| v > 0.0);
            if annotated {
                if !(j[0].is_finite() && j[1].is_finite()) {
                    return Err(ctx.err(format!("joint {k}: non-finite coordinate")));
                }
                kps.push(Keypoint::visible(j[0], j[1]));
            } else {
                kps.push(Keypoint::invisible());
            }
        }
        records.push(AnnotationRecord {
            image_id: file_stem(&entry.img_paths),
            image_path: entry.img_paths,
            image_width: entry.img_width.unwrap_or(0.0) as u32,
            image_height: entry.img_height.unwrap_or(0.0) as u32,
            keypoints: KeypointSet::new(kps),
        });
    }
    dedupe_ids(&mut records);
    Ok(records)
}

fn parse_onehand10k(text: &str, path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let ctx = LineCtx {
            path,
            line: idx + 1,
            record: file_stem(fields[0]),
        };
        let coords_at = match fields.len() {
            n if n == 3 + 2 * KEYPOINT_COUNT => 3,
            n if n == 1 + 2 * KEYPOINT_COUNT => 1,
            n => {
                return Err(ctx.err(format!(
                    "expected {} or {} fields, found {n}",
                    3 + 2 * KEYPOINT_COUNT,
                    1 + 2 * KEYPOINT_COUNT
                )))
            }
        };
        let (width, height) = if coords_at == 3 {
            (ctx.num(fields[1], "width")?, ctx.num(fields[2], "height")?)
        } else {
            (0, 0)
        };
        let mut kps = Vec::with_capacity(KEYPOINT_COUNT);
        for k in 0..KEYPOINT_COUNT {
            let x: f64 = ctx.num(fields[coords_at + 2 * k], &format!("x of keypoint {k}"))?;
            let y: f64 = ctx.num(fields[coords_at + 2 * k + 1], &format!("y of keypoint {k}"))?;
            if !(x.is_finite() && y.is_finite()) {
                return Err(ctx.err(format!("keypoint {k}: non-finite coordinate")));
            }
            kps.push(if x < 0.0 || y < 0.0 {
                Keypoint::invisible()
            } else {
                Keypoint::visible(x, y)
            });
        }
        records.push(AnnotationRecord {
            image_id: ctx.record.clone(),
            image_path: fields[0].to_string(),
            image_width: width,
            image_height: height,
            keypoints: KeypointSet::new(kps),
        });
    }
    dedupe_ids(&mut records);
    Ok(records)
}
