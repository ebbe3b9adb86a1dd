//! Run configuration: a TOML file overlaid with command-line flags.
//!
//! ```toml
//! representation = "LPM"        # LDM | LPM
//! scheme = "G1AND6"             # G1 | G6 | G1AND6
//! preprocess = "crop"           # crop | resize | none
//! crop_factor = 2.2
//! annotation_format = "canonical"
//!
//! [synthesis]
//! sigma_ldm = 1.0
//! sigma_lpm = 1.0
//! sigma_kcm = 1.0
//! lpm_distance_mode = "linear"  # linear | squared
//! grid = { width = 46, height = 46, input_size = 368 }
//!
//! [loss]                        # omitted: defaults for (representation, scheme)
//! lambda1 = 0.1
//! lambda2 = 0.02
//! decay_ratio = 0.1
//! decay_period = 20
//!
//! [topology]                    # omitted: the 21-keypoint hand
//! ```
//!
//! Unknown keys are rejected. Flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use nsrm_core::data::{AnnotationFormat, DEFAULT_CROP_FACTOR};
use nsrm_core::loss::{default_weights, LossWeights};
use nsrm_core::{GridSpec, GroupScheme, HandTopology, LpmDistanceMode, Representation, SynthesisConfig};
use serde::{Deserialize, Serialize};

/// How annotation coordinates reach the network input frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    /// Square crop of `crop_factor` times the keypoint box, resized to the input size.
    Crop,
    /// Whole image resized to the input size (aspect not preserved).
    Resize,
    /// Coordinates are already in input-image pixels.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub representation: Representation,
    pub scheme: GroupScheme,
    pub preprocess: Preprocess,
    pub crop_factor: f64,
    pub annotation_format: AnnotationFormat,
    pub synthesis: SynthesisConfig,
    pub loss: Option<LossWeights>,
    pub topology: Option<HandTopology>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            representation: Representation::Lpm,
            scheme: GroupScheme::G1And6,
            preprocess: Preprocess::Crop,
            crop_factor: DEFAULT_CROP_FACTOR,
            annotation_format: AnnotationFormat::Canonical,
            synthesis: SynthesisConfig::default(),
            loss: None,
            topology: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn loss_weights(&self) -> LossWeights {
        self.loss
            .unwrap_or_else(|| default_weights(self.representation, self.scheme))
    }

    pub fn topology(&self) -> HandTopology {
        self.topology.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.synthesis.validate()?;
        self.loss_weights().validate()?;
        self.topology().validate()?;
        if !(self.crop_factor > 1.0 && self.crop_factor.is_finite()) {
            bail!("invalid configuration: crop_factor must exceed 1, got {}", self.crop_factor);
        }
        Ok(())
    }
}

/// `W`, `WxH`, or `WxH@S` where `S` is the input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridArg {
    pub width: usize,
    pub height: usize,
    pub input_size: Option<usize>,
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (dims, input) = match s.split_once('@') {
            Some((d, i)) => (d, Some(i)),
            None => (s, None),
        };
        let num = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad grid size `{s}`"))
        };
        let (width, height) = match dims.split_once(['x', 'X']) {
            Some((w, h)) => (num(w)?, num(h)?),
            None => {
                let n = num(dims)?;
                (n, n)
            }
        };
        Ok(GridArg {
            width,
            height,
            input_size: input.map(num).transpose()?,
        })
    }
}

/// Flags shared by commands that synthesize or weight losses.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Limb mask representation (LDM or LPM).
    #[arg(long)]
    pub repr: Option<Representation>,
    /// Limb grouping (G1, G6 or G1AND6).
    #[arg(long)]
    pub scheme: Option<GroupScheme>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_ldm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_lpm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_kcm: Option<f64>,
    /// LPM distance term (linear or squared).
    #[arg(long)]
    pub lpm_distance: Option<LpmDistanceMode>,
    /// Output grid, e.g. `46`, `46x46` or `46x46@368`.
    #[arg(long)]
    pub grid: Option<GridArg>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(r) = self.repr {
            cfg.representation = r;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        let syn = &mut cfg.synthesis;
        if let Some(v) = self.sigma_ldm {
            syn.sigma_ldm = v;
        }
        if let Some(v) = self.sigma_lpm {
            syn.sigma_lpm = v;
        }
        if let Some(v) = self.sigma_kcm {
            syn.sigma_kcm = v;
        }
        if let Some(m) = self.lpm_distance {
            syn.lpm_distance_mode = m;
        }
        if let Some(g) = self.grid {
            syn.grid = GridSpec {
                width: g.width,
                height: g.height,
                input_size: g.input_size.unwrap_or(syn.grid.input_size),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_toml_str(
            r#"
            representation = "LDM"
            scheme = "G1"
            preprocess = "resize"
            annotation_format = "onehand10k"
            [synthesis]
            sigma_lpm = 2.0
            lpm_distance_mode = "squared"
            grid = { width = 32, height = 32, input_size = 256 }
            [loss]
            lambda1 = 0.7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.representation, Representation::Ldm);
        assert_eq!(cfg.scheme, GroupScheme::G1);
        assert_eq!(cfg.preprocess, Preprocess::Resize);
        assert_eq!(cfg.synthesis.sigma_lpm, 2.0);
        assert_eq!(cfg.synthesis.sigma_ldm, 1.0);
        assert_eq!(cfg.synthesis.grid.input_size, 256);
        assert_eq!(cfg.loss_weights().lambda1, 0.7);
        assert_eq!(cfg.loss_weights().decay_period, 20);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml_str("sigma = 1.0").is_err());
        assert!(RunConfig::from_toml_str("[synthesis]\nsigma_foo = 1.0").is_err());
        assert!(RunConfig::from_toml_str("[synthesis.grid]\ndepth = 3").is_err());
    }

    #[test]
    fn default_weights_follow_scheme() {
        let cfg = RunConfig {
            representation: Representation::Ldm,
            scheme: GroupScheme::G1And6,
            ..Default::default()
        };
        let w = cfg.loss_weights();
        assert_eq!((w.lambda1, w.lambda2), (0.2, 0.04));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "representation = \"LDM\"\n[synthesis]\nsigma_lpm = 3.0\n").unwrap();
        let args = ConfigArgs {
            config: Some(p),
            repr: Some(Representation::Lpm),
            sigma_lpm: Some(1.5),
            grid: Some("23x23@184".parse().unwrap()),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.representation, Representation::Lpm);
        assert_eq!(cfg.synthesis.sigma_lpm, 1.5);
        assert_eq!(cfg.synthesis.grid, GridSpec { width: 23, height: 23, input_size: 184 });
    }

    #[test]
    fn invalid_sigma_rejected() {
        let args = ConfigArgs {
            sigma_kcm: Some(0.0),
            ..Default::default()
        };
        let err = args.resolve().unwrap_err().to_string();
        assert!(err.contains("sigma_kcm"), "{err}");
    }

    #[test]
    fn grid_arg_forms() {
        assert_eq!(
            "46".parse::<GridArg>().unwrap(),
            GridArg { width: 46, height: 46, input_size: None }
        );
        assert_eq!(
            "40x30@320".parse::<GridArg>().unwrap(),
            GridArg { width: 40, height: 30, input_size: Some(320) }
        );
        assert!("4x".parse::<GridArg>().is_err());
    }
}
