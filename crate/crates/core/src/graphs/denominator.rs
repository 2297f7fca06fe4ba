use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::fsa::Fsa;
use crate::graphs::lexicon::{Lexicon, PhoneId, TokenId, BLANK};
use crate::graphs::topology::{build_ctc_topology, PhoneGraph};

/// Conditioning context of a bigram row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    /// Sentence-initial (unigram back-off) row.
    Start,
    Phone(PhoneId),
}

pub const BIGRAM_FORMAT_VERSION: u32 = 1;
const ROW_TOLERANCE: f64 = 1e-6;

/// Phone bigram over the real (non-blank, non-silence) phones.
#[derive(Clone, Debug, PartialEq)]
pub struct BigramLm {
    num_units: usize,
    silence_phone: PhoneId,
    rows: BTreeMap<Context, BTreeMap<PhoneId, f64>>,
}

impl BigramLm {
    pub fn new(
        num_units: usize,
        silence_phone: PhoneId,
        rows: BTreeMap<Context, BTreeMap<PhoneId, f64>>,
    ) -> Result<Self> {
        let is_real = |p: PhoneId| p != BLANK && p != silence_phone && (p as usize) < num_units;
        for (ctx, row) in &rows {
            if let Context::Phone(p) = ctx {
                if !is_real(*p) {
                    return Err(Error::Bigram(format!("context {p} is not a real phone")));
                }
            }
            let mut mass = 0.0;
            for (&next, &lp) in row {
                if !is_real(next) {
                    return Err(Error::Bigram(format!("successor {next} is not a real phone")));
                }
                if lp.is_nan() || lp > 0.0 {
                    return Err(Error::Bigram(format!("invalid log-probability {lp}")));
                }
                mass += lp.exp();
            }
            if (mass - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Bigram(format!(
                    "row {ctx:?} sums to {mass}, expected 1"
                )));
            }
        }
        Ok(Self {
            num_units,
            silence_phone,
            rows,
        })
    }

    /// Uniform successor distribution for every context.
    pub fn uniform(num_units: usize, silence_phone: PhoneId) -> Result<Self> {
        let real: Vec<PhoneId> = (1..num_units as PhoneId)
            .filter(|&p| p != silence_phone)
            .collect();
        if real.is_empty() {
            return Err(Error::Bigram("no real phones".into()));
        }
        let lp = -(real.len() as f64).ln();
        let row: BTreeMap<PhoneId, f64> = real.iter().map(|&p| (p, lp)).collect();
        let rows = std::iter::once(Context::Start)
            .chain(real.iter().map(|&p| Context::Phone(p)))
            .map(|c| (c, row.clone()))
            .collect();
        Self::new(num_units, silence_phone, rows)
    }

    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn silence_phone(&self) -> PhoneId {
        self.silence_phone
    }

    pub fn row(&self, ctx: Context) -> Option<&BTreeMap<PhoneId, f64>> {
        self.rows.get(&ctx)
    }

    pub fn log_prob(&self, ctx: Context, next: PhoneId) -> f64 {
        self.rows
            .get(&ctx)
            .and_then(|r| r.get(&next))
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn real_phones(&self) -> impl Iterator<Item = PhoneId> + '_ {
        (1..self.num_units as PhoneId).filter(move |&p| p != self.silence_phone)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BigramFile {
            version: BIGRAM_FORMAT_VERSION,
            num_units: self.num_units,
            silence_phone: self.silence_phone,
            rows: self
                .rows
                .iter()
                .map(|(ctx, row)| BigramRow {
                    context: match ctx {
                        Context::Start => None,
                        Context::Phone(p) => Some(*p),
                    },
                    log_probs: row.iter().map(|(&p, &lp)| (p, lp)).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BigramFile = serde_json::from_str(text)?;
        if file.version != BIGRAM_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: "bigram",
                found: file.version,
                expected: BIGRAM_FORMAT_VERSION,
            });
        }
        let rows = file
            .rows
            .into_iter()
            .map(|r| {
                let ctx = r.context.map_or(Context::Start, Context::Phone);
                (ctx, r.log_probs.into_iter().collect())
            })
            .collect();
        Self::new(file.num_units, file.silence_phone, rows)
    }
}

#[derive(Serialize, Deserialize)]
struct BigramFile {
    version: u32,
    num_units: usize,
    silence_phone: PhoneId,
    rows: Vec<BigramRow>,
}

#[derive(Serialize, Deserialize)]
struct BigramRow {
    context: Option<PhoneId>,
    log_probs: Vec<(PhoneId, f64)>,
}

/// Add-one smoothed phone bigram from lexicon-expanded transcripts.
/// Silence is not counted.
pub fn estimate_phone_bigram(transcripts: &[Vec<TokenId>], lex: &Lexicon) -> Result<BigramLm> {
    if transcripts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let real: Vec<PhoneId> = lex.real_phones().collect();
    if real.is_empty() {
        return Err(Error::Bigram("lexicon declares no real phones".into()));
    }
    let mut counts: BTreeMap<Context, BTreeMap<PhoneId, u64>> = BTreeMap::new();
    for utt in transcripts {
        let phones = lex.expand(utt)?;
        let mut ctx = Context::Start;
        for p in phones.into_iter().filter(|&p| p != lex.silence_phone()) {
            *counts.entry(ctx).or_default().entry(p).or_default() += 1;
            ctx = Context::Phone(p);
        }
    }
    let vocab = real.len() as f64;
    let rows = std::iter::once(Context::Start)
        .chain(real.iter().map(|&p| Context::Phone(p)))
        .map(|ctx| {
            let row_counts = counts.get(&ctx);
            let total: u64 = row_counts.map_or(0, |r| r.values().sum());
            let denom = total as f64 + vocab;
            let row = real
                .iter()
                .map(|&next| {
                    let c = row_counts.and_then(|r| r.get(&next)).copied().unwrap_or(0);
                    (next, ((c as f64 + 1.0) / denom).ln())
                })
                .collect();
            (ctx, row)
        })
        .collect();
    BigramLm::new(lex.num_units(), lex.silence_phone(), rows)
}

/// Builds the utterance-independent `G_den`: a phone-bigram acceptor with
/// unweighted optional silence at every phone boundary, expanded by the CTC
/// topology.
pub fn build_denominator_graph(lm: &BigramLm) -> Result<Fsa> {
    let num_units = lm.num_units();
    let topo = build_ctc_topology(num_units)?;
    let contexts: Vec<Context> = std::iter::once(Context::Start)
        .chain(lm.real_phones().map(Context::Phone))
        .collect();
    for ctx in &contexts {
        if lm.row(*ctx).is_none() {
            return Err(Error::Bigram(format!("missing bigram row for {ctx:?}")));
        }
    }

    let mut g = PhoneGraph::default();
    // (context state, post-silence state) per context.
    let states: BTreeMap<Context, (usize, usize)> = contexts
        .iter()
        .map(|&c| (c, (g.add_state(), g.add_state())))
        .collect();
    g.set_start(states[&Context::Start].0);
    for ctx in &contexts {
        let (here, after_sil) = states[ctx];
        g.add_arc(here, after_sil, Some(lm.silence_phone()), 0.0);
        g.add_arc(here, after_sil, None, 0.0);
        g.set_final(after_sil, 0.0);
        for (&next, &lp) in lm.row(*ctx).expect("checked") {
            let (dst, _) = states[&Context::Phone(next)];
            g.add_arc(after_sil, dst, Some(next), lp);
        }
    }
    g.remove_epsilons()?.expand_ctc(&topo)
}
