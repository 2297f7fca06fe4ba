use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lfmmi::decoders::{format_nbest, lfmmi_rescore, parse_nbest, DEFAULT_MMI_WEIGHT};

use crate::commands::{emit, parallel_map};
use crate::config::{self, FileConfig};
use crate::inputs::{load_emissions, load_fsa, load_lexicon, read_manifest};

#[derive(Args, Debug)]
pub struct RescoreArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// N-best input produced by a decode command.
    #[arg(long)]
    nbest: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Optional denominator graph; reports log-posteriors instead of
    /// numerator scores without changing the ranking.
    #[arg(long)]
    den: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    lambda_mmi: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_normalize_check: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run(args: RescoreArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let text = fs::read_to_string(&args.nbest)
        .with_context(|| format!("reading {}", args.nbest.display()))?;
    let lists = parse_nbest(&text).with_context(|| format!("parsing {}", args.nbest.display()))?;
    let lambda = config::finite(
        "lambda_mmi",
        config::pick(args.lambda_mmi, file.lambda_mmi, DEFAULT_MMI_WEIGHT),
    )?;
    let output = args.output.or(file.output);
    if lambda == 0.0 {
        return emit(output.as_deref(), &text);
    }

    let lex = load_lexicon(&config::required(args.lexicon, file.lexicon, "lexicon")?)?;
    let den = args.den.or(file.den).map(|p| load_fsa(&p)).transpose()?;
    let utts: HashMap<String, PathBuf> =
        read_manifest(&config::required(args.manifest, file.manifest, "manifest")?)?
            .into_iter()
            .map(|u| (u.id, u.phone_emissions))
            .collect();
    let jobs = config::at_least_one("jobs", config::pick(args.jobs, file.jobs, 1))?;
    let check = !args.no_normalize_check;

    let out = parallel_map(jobs, &lists, |list| {
        let path = utts
            .get(&list.utt_id)
            .with_context(|| format!("manifest has no utterance `{}`", list.utt_id))?;
        let e = load_emissions(path, check)?;
        let rescored = lfmmi_rescore(list, &e, &lex, den.as_ref(), lambda)
            .with_context(|| format!("rescoring `{}`", list.utt_id))?;
        for w in &rescored.warnings {
            log::warn!("{}: {w}", rescored.utt_id);
        }
        Ok(rescored)
    })?;
    emit(output.as_deref(), &format_nbest(&out))
}
