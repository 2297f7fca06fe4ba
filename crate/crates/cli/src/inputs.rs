//! Loaders for the files the commands consume.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lfmmi::decoders::{NextTokenScores, TableAedProvider, Vocabulary};
use lfmmi::forward::EmissionMatrix;
use lfmmi::graphs::{Fsa, Lexicon};
use serde::Deserialize;

/// Reads a lexicon in either the text or the binary (`LLEX`) format.
pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let lex = if bytes.starts_with(b"LLEX") {
        Lexicon::from_bytes(&bytes)
    } else {
        let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
        Lexicon::parse(&text)
    };
    lex.with_context(|| format!("loading lexicon {}", path.display()))
}

pub fn load_fsa(path: &Path) -> Result<Fsa> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Fsa::from_bytes(&bytes).with_context(|| format!("loading graph {}", path.display()))
}

pub fn load_emissions(path: &Path, check_normalization: bool) -> Result<EmissionMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    EmissionMatrix::from_lemi(&bytes, check_normalization)
        .with_context(|| format!("loading emissions {}", path.display()))
}

/// One manifest row: `utt_id  phone_emissions  token_emissions  [att_table]`.
/// Relative paths resolve against the manifest's directory.
#[derive(Clone, Debug)]
pub struct Utterance {
    pub id: String,
    pub phone_emissions: PathBuf,
    pub token_emissions: Option<PathBuf>,
    pub att_table: Option<PathBuf>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<Utterance>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |s: &str| -> Option<PathBuf> {
        (!s.is_empty() && s != "-").then(|| base.join(s))
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 4 {
            bail!("{}:{}: expected 2 to 4 tab-separated fields", path.display(), i + 1);
        }
        out.push(Utterance {
            id: fields[0].to_string(),
            phone_emissions: base.join(fields[1]),
            token_emissions: fields.get(2).and_then(|s| resolve(s)),
            att_table: fields.get(3).and_then(|s| resolve(s)),
        });
    }
    if out.is_empty() {
        bail!("manifest {} lists no utterances", path.display());
    }
    Ok(out)
}

/// Kaldi-style `utt_id tok tok ...` lines, in file order.
pub fn read_transcripts(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let Some(id) = it.next() else { continue };
        out.push((id.to_string(), it.map(str::to_string).collect()));
    }
    Ok(out)
}

pub fn transcript_map(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    let mut map = HashMap::new();
    for (id, tokens) in read_transcripts(path)? {
        if map.insert(id.clone(), tokens).is_some() {
            bail!("{}: utterance `{id}` appears twice", path.display());
        }
    }
    Ok(map)
}

pub const ATT_TABLE_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttDistribution {
    tokens: HashMap<String, f64>,
    eos: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttRow {
    prefix: Vec<String>,
    #[serde(flatten)]
    dist: AttDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttTableFile {
    version: u32,
    fallback: AttDistribution,
    #[serde(default)]
    rows: Vec<AttRow>,
}

fn distribution(d: AttDistribution, vocab: &Vocabulary) -> Result<NextTokenScores> {
    let mut tokens = vec![f64::NEG_INFINITY; vocab.len()];
    for (sym, lp) in d.tokens {
        let id = vocab.id(&sym).with_context(|| format!("unknown token `{sym}`"))?;
        tokens[id.index()] = lp;
    }
    Ok(NextTokenScores { tokens, eos: d.eos })
}

/// Prefix-keyed next-token log-probabilities standing in for an attention
/// decoder. Tokens missing from a row get `-inf`.
pub fn load_att_table(path: &Path, vocab: &Vocabulary) -> Result<TableAedProvider> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: AttTableFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.version != ATT_TABLE_VERSION {
        bail!(
            "{}: unsupported attention table version {} (expected {ATT_TABLE_VERSION})",
            path.display(),
            file.version
        );
    }
    let mut table = TableAedProvider::new(vocab.len(), distribution(file.fallback, vocab)?)?;
    for row in file.rows {
        let prefix = vocab.ids_of(&row.prefix)?;
        table.insert(prefix, distribution(row.dist, vocab)?)?;
    }
    Ok(table)
}
