use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lfmmi::decoders::{approx_bayesian_risk, parse_nbest, DEFAULT_RISK_EPSILON};
use serde::Serialize;

use crate::commands::emit;
use crate::inputs::transcript_map;

pub const RISK_REPORT_VERSION: u32 = 1;

#[derive(Args, Debug)]
pub struct RiskArgs {
    #[arg(long)]
    nbest: PathBuf,
    /// Reference transcripts, `utt_id tok tok ...` per line.
    #[arg(long)]
    references: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RISK_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct UttRisk {
    utt_id: String,
    risk: f64,
}

#[derive(Serialize)]
struct RiskReport {
    version: u32,
    epsilon: f64,
    mean_risk: f64,
    utterances: Vec<UttRisk>,
}

pub fn run(args: RiskArgs) -> Result<()> {
    crate::config::finite("epsilon", args.epsilon)?;
    let text = fs::read_to_string(&args.nbest)
        .with_context(|| format!("reading {}", args.nbest.display()))?;
    let lists = parse_nbest(&text).with_context(|| format!("parsing {}", args.nbest.display()))?;
    let refs = transcript_map(&args.references)?;
    let mut utterances = Vec::with_capacity(lists.len());
    for list in &lists {
        let reference = refs
            .get(&list.utt_id)
            .with_context(|| format!("no reference for `{}`", list.utt_id))?;
        utterances.push(UttRisk {
            utt_id: list.utt_id.clone(),
            risk: approx_bayesian_risk(list, reference, args.epsilon),
        });
    }
    let mean_risk = if utterances.is_empty() {
        0.0
    } else {
        utterances.iter().map(|u| u.risk).sum::<f64>() / utterances.len() as f64
    };
    let report = RiskReport {
        version: RISK_REPORT_VERSION,
        epsilon: args.epsilon,
        mean_risk,
        utterances,
    };
    let mut out = serde_json::to_string_pretty(&report)?;
    out.push('\n');
    emit(args.output.as_deref(), &out)
}
