use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use lfmmi::alignment_score::{AlignmentScorer, DEFAULT_LOOKAHEAD};
use lfmmi::decoders::{
    aed_beam_search, format_nbest, nt_beam_search, AedConfig, AedProviders, CtcPrefixScorer,
    FrameTableNtProvider, NBestList, NtConfig, StopCondition, Vocabulary, DEFAULT_BEAM,
    DEFAULT_MMI_WEIGHT,
};
use lfmmi::forward::EmissionMatrix;
use lfmmi::graphs::{Fsa, Lexicon};
use lfmmi::prefix_score::MmiScorer;

use crate::commands::{emit, parallel_map};
use crate::config::{self, FileConfig};
use crate::inputs::{load_att_table, load_emissions, load_fsa, load_lexicon, read_manifest, Utterance};

const DEFAULT_BETA_ATT: f64 = 0.7;
const DEFAULT_BETA_CTC: f64 = 0.3;

#[derive(Args, Debug)]
pub struct CommonDecodeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    den: Option<PathBuf>,
    /// `utt_id  phone_emissions  token_emissions  [att_table]` rows.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    beta_mmi: Option<f64>,
    #[arg(long)]
    beam: Option<usize>,
    /// N-best size; defaults to the beam.
    #[arg(long)]
    nbest: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_normalize_check: bool,
    /// N-best destination; stdout by default.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AedArgs {
    #[command(flatten)]
    common: CommonDecodeArgs,
    #[arg(long)]
    beta_att: Option<f64>,
    #[arg(long)]
    beta_ctc: Option<f64>,
    /// Maximum hypothesis length; defaults to the frame count.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, value_enum)]
    stop: Option<Stop>,
}

#[derive(Args, Debug)]
pub struct NtArgs {
    #[command(flatten)]
    common: CommonDecodeArgs,
    /// Look-ahead frames of the MMI alignment score.
    #[arg(long)]
    lookahead: Option<usize>,
    /// Maximum tokens per hypothesis; defaults to the frame count.
    #[arg(long)]
    u_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Stop {
    BestFinished,
    MaxLength,
}

impl Stop {
    fn parse(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true).map_err(|_| anyhow::anyhow!("unknown stop condition `{s}`"))
    }
}

struct Shared {
    lex: Lexicon,
    den: Option<Fsa>,
    vocab: Vocabulary,
    utts: Vec<Utterance>,
    beta_mmi: f64,
    beam: usize,
    nbest: Option<usize>,
    jobs: usize,
    check: bool,
    output: Option<PathBuf>,
}

fn shared(args: CommonDecodeArgs, file: &FileConfig) -> Result<Shared> {
    let lex = load_lexicon(&config::required(args.lexicon, file.lexicon.clone(), "lexicon")?)?;
    let beta_mmi = config::finite(
        "beta_mmi",
        config::pick(args.beta_mmi, file.beta_mmi, DEFAULT_MMI_WEIGHT),
    )?;
    let den = if beta_mmi != 0.0 {
        Some(load_fsa(&config::required(args.den, file.den.clone(), "den")?)?)
    } else {
        None
    };
    let nbest = args.nbest.or(file.nbest);
    if nbest == Some(0) {
        bail!("nbest must be at least 1");
    }
    Ok(Shared {
        vocab: Vocabulary::from_lexicon(&lex)?,
        lex,
        den,
        utts: read_manifest(&config::required(args.manifest, file.manifest.clone(), "manifest")?)?,
        beta_mmi,
        beam: config::at_least_one("beam", config::pick(args.beam, file.beam, DEFAULT_BEAM))?,
        nbest,
        jobs: config::at_least_one("jobs", config::pick(args.jobs, file.jobs, 1))?,
        check: !args.no_normalize_check,
        output: args.output.or(file.output.clone()),
    })
}

fn token_emissions(s: &Shared, u: &Utterance) -> Result<EmissionMatrix> {
    let Some(p) = &u.token_emissions else {
        bail!("utterance `{}` has no token emissions", u.id);
    };
    let e = load_emissions(p, s.check)?;
    if e.num_units() != s.vocab.len() + 1 {
        bail!(
            "{}: token emissions have {} columns, expected blank plus {} tokens",
            p.display(),
            e.num_units(),
            s.vocab.len()
        );
    }
    Ok(e)
}

fn write_lists(s: &Shared, lists: &[NBestList]) -> Result<()> {
    for list in lists {
        for w in &list.warnings {
            log::warn!("{}: {w}", list.utt_id);
        }
    }
    emit(s.output.as_deref(), &format_nbest(lists))
}

pub fn run_aed(args: AedArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let beta_att = config::finite("beta_att", config::pick(args.beta_att, file.beta_att, DEFAULT_BETA_ATT))?;
    let beta_ctc = config::finite("beta_ctc", config::pick(args.beta_ctc, file.beta_ctc, DEFAULT_BETA_CTC))?;
    let stop = match (args.stop, &file.stop) {
        (Some(s), _) => s,
        (None, Some(s)) => Stop::parse(s)?,
        (None, None) => Stop::BestFinished,
    };
    let max_len = args.max_len.or(file.max_len);
    let s = shared(args.common, &file)?;

    let lists = parallel_map(s.jobs, &s.utts, |u| {
        let phones = load_emissions(&u.phone_emissions, s.check)?;
        let tokens = if beta_ctc != 0.0 { Some(token_emissions(&s, u)?) } else { None };
        let att = match (&u.att_table, beta_att != 0.0) {
            (Some(p), true) => Some(load_att_table(p, &s.vocab)?),
            _ => None,
        };
        let ctc = tokens.as_ref().map(CtcPrefixScorer::new).transpose()?;
        let scorer = match &s.den {
            Some(den) => Some(MmiScorer::new(&s.lex, den, &phones)?),
            None => None,
        };
        let providers = AedProviders {
            att: att.as_ref().map(|p| (p as _, beta_att)),
            ctc: ctc.as_ref().map(|p| (p as _, beta_ctc)),
            mmi: scorer.as_ref().map(|m| (m, s.beta_mmi)),
        };
        let cfg = AedConfig {
            beam: s.beam,
            max_len: max_len.unwrap_or(phones.num_frames()),
            nbest: s.nbest,
            stop: match stop {
                Stop::BestFinished => StopCondition::BestFinished,
                Stop::MaxLength => StopCondition::MaxLength,
            },
        };
        aed_beam_search(&providers, &s.vocab, &cfg, &u.id).with_context(|| format!("decoding `{}`", u.id))
    })?;
    write_lists(&s, &lists)
}

pub fn run_nt(args: NtArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let lookahead = config::pick(args.lookahead, file.lookahead, DEFAULT_LOOKAHEAD);
    let u_max = args.u_max.or(file.u_max);
    if u_max == Some(0) {
        bail!("u_max must be at least 1");
    }
    let s = shared(args.common, &file)?;

    let lists = parallel_map(s.jobs, &s.utts, |u| {
        let tokens = token_emissions(&s, u)?;
        let provider = FrameTableNtProvider::new(&tokens)?;
        let phones = match &s.den {
            Some(_) => Some(load_emissions(&u.phone_emissions, s.check)?),
            None => None,
        };
        let scorer = match (&s.den, &phones) {
            (Some(den), Some(e)) => Some(MmiScorer::new(&s.lex, den, e)?),
            _ => None,
        };
        let ali = scorer.as_ref().map(|m| AlignmentScorer::new(m, lookahead));
        let cfg = NtConfig {
            beam: s.beam,
            u_max: u_max.unwrap_or(tokens.num_frames()).max(1),
            nbest: s.nbest,
        };
        nt_beam_search(&provider, ali.as_ref().map(|a| (a, s.beta_mmi)), &s.vocab, &cfg, &u.id)
            .with_context(|| format!("decoding `{}`", u.id))
    })?;
    write_lists(&s, &lists)
}
