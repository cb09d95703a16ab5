//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use logratio_core::{ClassifierSpec, TransformSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

pub const DEFAULT_SPLIT: f64 = 0.6;
pub const DEFAULT_ZERO_REPLACEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paperlike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Assay CSV; a relative path is resolved against the config file.
    Csv { path: PathBuf },
    Synthetic {
        preset: Preset,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_per_zone: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        imbalance: Option<f64>,
        /// Generator seed; defaults to the preset's own.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

fn default_split() -> f64 {
    DEFAULT_SPLIT
}

fn default_true() -> bool {
    true
}

fn default_baseline() -> String {
    "identity".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_zero() -> f64 {
    DEFAULT_ZERO_REPLACEMENT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default = "default_baseline")]
    pub baseline_transform: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Fraction of the row total substituted for zero assays before closure.
    #[serde(default = "default_zero")]
    pub zero_replacement: f64,
    pub data_source: DataSource,
    pub transforms: Vec<TransformSpec>,
    pub classifiers: Vec<ClassifierSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DataSource::Csv { path: p } = &mut cfg.data_source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction must be in (0, 1), got {}", self.split_fraction));
        }
        if !(self.zero_replacement > 0.0 && self.zero_replacement < 1.0) {
            return bad(format!("zero_replacement must be in (0, 1), got {}", self.zero_replacement));
        }
        if self.transforms.is_empty() {
            return bad("at least one transform is required".into());
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required".into());
        }
        let mut ids: Vec<String> = self.transforms.iter().map(|t| t.id()).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate transform id {:?}", w[0]));
        }
        let mut ids: Vec<String> = self.classifiers.iter().map(|c| c.id()).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate classifier id {:?}", w[0]));
        }
        for t in &self.transforms {
            t.validate()?;
        }
        for c in &self.classifiers {
            c.validate()?;
        }
        if let DataSource::Synthetic { samples_per_zone, imbalance, .. } = &self.data_source {
            if *samples_per_zone == Some(0) {
                return bad("samples_per_zone must be positive".into());
            }
            if let Some(i) = imbalance {
                if !(0.0..1.0).contains(i) {
                    return bad(format!("imbalance must be in [0, 1), got {i}"));
                }
            }
        }
        Ok(())
    }
}
