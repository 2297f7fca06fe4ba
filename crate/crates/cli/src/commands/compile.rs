use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use lfmmi::graphs::{build_denominator_graph, estimate_phone_bigram};

use crate::inputs::{load_lexicon, read_transcripts};

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Lexicon text file (`phones:` header, then `token phone...` lines).
    #[arg(long)]
    lexicon: PathBuf,
    /// Training transcripts, one `utt_id tok tok ...` per line.
    #[arg(long)]
    transcripts: PathBuf,
    /// Output directory for den.lfsa, lexicon.bin and bigram.json.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: CompileArgs) -> Result<()> {
    let lex = load_lexicon(&args.lexicon)?;
    let transcripts = read_transcripts(&args.transcripts)?;
    let mut corpus = Vec::with_capacity(transcripts.len());
    for (id, tokens) in &transcripts {
        corpus.push(lex.lookup_all(tokens).with_context(|| format!("transcript `{id}`"))?);
    }
    if corpus.is_empty() {
        bail!("{} holds no transcripts", args.transcripts.display());
    }
    let lm = estimate_phone_bigram(&corpus, &lex)?;
    let den = build_denominator_graph(&lm)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = args.out.join(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    };
    write("den.lfsa", &den.to_bytes()?)?;
    write("lexicon.bin", &lex.to_bytes()?)?;
    write("bigram.json", lm.to_json()?.as_bytes())?;
    log::info!(
        "denominator graph: {} states, {} arcs",
        den.num_states(),
        den.arcs().len()
    );
    Ok(())
}
