//! Run configuration: an optional TOML file of `key = value` pairs, with
//! command-line flags taking precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lexicon: Option<PathBuf>,
    pub den: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub beta_att: Option<f64>,
    pub beta_ctc: Option<f64>,
    pub beta_mmi: Option<f64>,
    pub lambda_mmi: Option<f64>,
    pub alpha_aed: Option<f64>,
    pub alpha_nt: Option<f64>,
    pub acoustic_scale: Option<f64>,
    pub lookahead: Option<usize>,
    pub beam: Option<usize>,
    pub nbest: Option<usize>,
    pub u_max: Option<usize>,
    pub max_len: Option<usize>,
    pub jobs: Option<usize>,
    pub stop: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn required(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    match flag.or(file) {
        Some(p) => Ok(p),
        None => bail!("missing --{name} (flag or config key)"),
    }
}

pub fn finite(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        bail!("{name} must be finite, got {v}");
    }
    Ok(v)
}

pub fn at_least_one(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        bail!("{name} must be at least 1");
    }
    Ok(v)
}
