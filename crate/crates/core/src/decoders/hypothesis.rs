use std::collections::BTreeMap;

use crate::graphs::TokenId;
use crate::prefix_score::PrefixEntry;

pub const ATT: &str = "att";
pub const CTC: &str = "ctc";
pub const MMI: &str = "mmi";
pub const NT: &str = "nt";
pub const LFMMI_RESCORE: &str = "lfmmi";

/// Weighted per-source score contributions, keyed by source name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreBreakdown(BTreeMap<String, f64>);

impl ScoreBreakdown {
    pub fn add(&mut self, source: &str, value: f64) {
        *self.0.entry(source.to_string()).or_insert(0.0) += value;
    }

    pub fn set(&mut self, source: &str, value: f64) {
        self.0.insert(source.to_string(), value);
    }

    pub fn get(&self, source: &str) -> Option<f64> {
        self.0.get(source).copied()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Partial or complete decoding hypothesis. `tokens` is blank-free and
/// excludes `<sos>`/`<eos>`; `frame` is the number of consumed frames
/// (frame-synchronous search only).
#[derive(Clone, Debug)]
pub struct Hypothesis {
    tokens: Vec<TokenId>,
    score: f64,
    frame: usize,
    breakdown: ScoreBreakdown,
    mmi: Option<PrefixEntry>,
}

impl Hypothesis {
    pub fn root(mmi: Option<PrefixEntry>) -> Self {
        Self {
            tokens: Vec::new(),
            score: 0.0,
            frame: 0,
            breakdown: ScoreBreakdown::default(),
            mmi,
        }
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn breakdown(&self) -> &ScoreBreakdown {
        &self.breakdown
    }

    pub fn mmi_entry(&self) -> Option<&PrefixEntry> {
        self.mmi.as_ref()
    }

    pub(crate) fn extended(&self, token: TokenId, mmi: Option<PrefixEntry>) -> Self {
        let mut child = self.clone();
        child.tokens.push(token);
        if mmi.is_some() {
            child.mmi = mmi;
        }
        child
    }

    pub(crate) fn advanced(&self) -> Self {
        let mut child = self.clone();
        child.frame += 1;
        child
    }

    pub(crate) fn add(&mut self, source: &str, value: f64) {
        self.breakdown.add(source, value);
        self.score += value;
    }

    pub(crate) fn set_component(&mut self, source: &str, value: f64) {
        self.breakdown.set(source, value);
        self.score = self.breakdown.total();
    }
}
