use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lfmmi::forward::{lemi_bytes, lfmmi_objective_and_grad_scaled, EmissionMatrix, LfMmiOutput};
use lfmmi::graphs::{build_numerator_graph_from_symbols, Fsa, Lexicon};

use crate::commands::{emit, parallel_map};
use crate::config::{self, FileConfig};
use crate::inputs::{load_emissions, load_fsa, load_lexicon, read_manifest, transcript_map};

pub const SCORE_REPORT_VERSION: u32 = 1;

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Denominator graph (den.lfsa).
    #[arg(long)]
    den: Option<PathBuf>,
    /// Single-utterance phone emissions (LEMI).
    #[arg(long, conflicts_with = "manifest")]
    emissions: Option<PathBuf>,
    /// Single-utterance transcript, space separated tokens.
    #[arg(long, conflicts_with_all = ["num_graph", "manifest"])]
    transcript: Option<String>,
    /// Use this numerator graph instead of compiling one from a transcript.
    #[arg(long)]
    num_graph: Option<PathBuf>,
    /// Gradient output (LEMI) in single-utterance mode.
    #[arg(long)]
    grad_out: Option<PathBuf>,
    /// Batch mode: `utt_id  phone_emissions  ...` rows.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Batch mode: `utt_id tok tok ...` transcripts.
    #[arg(long, requires = "manifest")]
    transcripts: Option<PathBuf>,
    /// Batch mode: directory receiving `<utt_id>.grad.lemi` files.
    #[arg(long, requires = "manifest")]
    grad_dir: Option<PathBuf>,
    #[arg(long)]
    acoustic_scale: Option<f64>,
    #[arg(long)]
    no_normalize_check: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Report destination; stdout by default.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn report(utt_id: Option<&str>, frames: usize, out: &LfMmiOutput, grad: Option<&Path>) -> String {
    let mut s = format!("{{\"version\":{SCORE_REPORT_VERSION}");
    if let Some(id) = utt_id {
        s.push_str(&format!(",\"utt_id\":{}", serde_json::Value::from(id)));
    }
    s.push_str(&format!(
        ",\"frames\":{frames},\"objective\":{:.9},\"numerator\":{:.9},\"denominator\":{:.9}",
        out.objective, out.numerator, out.denominator
    ));
    if let Some(p) = grad {
        s.push_str(&format!(
            ",\"gradient\":{}",
            serde_json::Value::from(p.display().to_string())
        ));
    }
    s.push('}');
    s
}

fn score_one(
    num: &Fsa,
    den: &Fsa,
    e: &EmissionMatrix,
    scale: f64,
    grad: Option<&Path>,
) -> Result<LfMmiOutput> {
    let out = lfmmi_objective_and_grad_scaled(num, den, e, scale)?;
    if let Some(p) = grad {
        fs::write(p, lemi_bytes(&out.gradient)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(out)
}

fn numerator(lex: Option<&Lexicon>, tokens: &[String]) -> Result<Fsa> {
    let Some(lex) = lex else {
        bail!("--lexicon is required to compile numerator graphs");
    };
    Ok(build_numerator_graph_from_symbols(tokens, lex)?)
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let den = load_fsa(&config::required(args.den, file.den, "den")?)?;
    let lex = args.lexicon.or(file.lexicon).map(|p| load_lexicon(&p)).transpose()?;
    let scale = config::finite(
        "acoustic_scale",
        config::pick(args.acoustic_scale, file.acoustic_scale, 1.0),
    )?;
    let jobs = config::at_least_one("jobs", config::pick(args.jobs, file.jobs, 1))?;
    let check = !args.no_normalize_check;
    let output = args.output.or(file.output);
    let manifest = args.manifest.or(file.manifest);

    if let Some(manifest) = manifest {
        let utts = read_manifest(&manifest)?;
        let Some(tpath) = args.transcripts else {
            bail!("batch scoring needs --transcripts");
        };
        let transcripts = transcript_map(&tpath)?;
        if let Some(dir) = &args.grad_dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let lines = parallel_map(jobs, &utts, |u| {
            let tokens = transcripts
                .get(&u.id)
                .with_context(|| format!("no transcript for `{}`", u.id))?;
            let num = numerator(lex.as_ref(), tokens)?;
            let e = load_emissions(&u.phone_emissions, check)?;
            let grad = args.grad_dir.as_ref().map(|d| d.join(format!("{}.grad.lemi", u.id)));
            let out = score_one(&num, &den, &e, scale, grad.as_deref())
                .with_context(|| format!("scoring `{}`", u.id))?;
            Ok(report(Some(&u.id), e.num_frames(), &out, grad.as_deref()))
        })?;
        let mut text = lines.join("\n");
        text.push('\n');
        return emit(output.as_deref(), &text);
    }

    let Some(epath) = args.emissions else {
        bail!("give --emissions (single utterance) or --manifest (batch)");
    };
    let e = load_emissions(&epath, check)?;
    let num = match (&args.num_graph, &args.transcript) {
        (Some(p), _) => load_fsa(p)?,
        (None, Some(t)) => {
            let tokens: Vec<String> = t.split_whitespace().map(str::to_string).collect();
            numerator(lex.as_ref(), &tokens)?
        }
        (None, None) => bail!("give --transcript or --num-graph"),
    };
    let out = score_one(&num, &den, &e, scale, args.grad_out.as_deref())?;
    let mut text = report(None, e.num_frames(), &out, args.grad_out.as_deref());
    text.push('\n');
    emit(output.as_deref(), &text)
}
