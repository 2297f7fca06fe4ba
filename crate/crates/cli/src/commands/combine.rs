use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use lfmmi::forward::{combine_training_objectives, ModelKind, ObjectiveParts};

use crate::config::{self, FileConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Aed,
    Nt,
}

/// Interpolates externally computed criterion values into one training loss.
#[derive(Args, Debug)]
pub struct CombineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Kind,
    /// Interpolation weight; 0.3 for AED and 0.5 for NT by default.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ce: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ctc: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lfmmi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nt: Option<f64>,
}

pub fn run(args: CombineArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let (kind, file_alpha) = match args.kind {
        Kind::Aed => (ModelKind::Aed, file.alpha_aed),
        Kind::Nt => (ModelKind::Nt, file.alpha_nt),
    };
    let alpha = config::finite("alpha", config::pick(args.alpha, file_alpha, kind.default_alpha()))?;
    let parts = ObjectiveParts {
        ce: args.ce,
        ctc: args.ctc,
        lfmmi: args.lfmmi,
        nt: args.nt,
    };
    let value = combine_training_objectives(kind, alpha, &parts)?;
    println!("{value:.9}");
    Ok(())
}
