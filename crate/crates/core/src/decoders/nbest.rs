use std::fmt::Write as _;

use crate::decoders::hypothesis::ScoreBreakdown;
use crate::error::{Error, Result};

pub const NBEST_HEADER: &str = "#lfmmi-nbest v1";

#[derive(Clone, Debug, PartialEq)]
pub struct NBestEntry {
    pub tokens: Vec<String>,
    pub total: f64,
    pub breakdown: ScoreBreakdown,
}

/// Ranked hypotheses of one utterance, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NBestList {
    pub utt_id: String,
    pub entries: Vec<NBestEntry>,
    /// Set when the list holds unfinished hypotheses or demoted entries.
    pub warnings: Vec<String>,
}

impl NBestList {
    pub fn new(utt_id: impl Into<String>, mut entries: Vec<NBestEntry>) -> Self {
        sort_entries(&mut entries);
        Self {
            utt_id: utt_id.into(),
            entries,
            warnings: Vec::new(),
        }
    }

    pub fn best(&self) -> Option<&NBestEntry> {
        self.entries.first()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Descending by total score; ties keep their existing order.
pub(crate) fn sort_entries(entries: &mut [NBestEntry]) {
    entries.sort_by(|a, b| b.total.total_cmp(&a.total));
}

/// Serializes lists as tab-separated lines:
/// `utt_id  rank  total  source=score;...  tokens`, scores with 6 decimals.
pub fn format_nbest(lists: &[NBestList]) -> String {
    let mut out = String::new();
    out.push_str(NBEST_HEADER);
    out.push('\n');
    for list in lists {
        for (rank, e) in list.entries.iter().enumerate() {
            let parts: Vec<String> = e
                .breakdown
                .iter()
                .map(|(k, v)| format!("{k}={v:.6}"))
                .collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{}\t{}",
                list.utt_id,
                rank + 1,
                e.total,
                parts.join(";"),
                e.tokens.join(" ")
            );
        }
    }
    out
}

/// Parses [`format_nbest`] output, grouping consecutive lines by utterance.
pub fn parse_nbest(text: &str) -> Result<Vec<NBestList>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == NBEST_HEADER => {}
        Some((_, h)) if h.starts_with("#lfmmi-nbest") => {
            return Err(Error::Format(format!("unsupported N-best header `{h}`")))
        }
        _ => return Err(Error::Format("missing N-best header".into())),
    }
    let mut lists: Vec<NBestList> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::Format(format!("N-best line {n}: {m}"));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(err("expected 5 tab-separated fields"));
        }
        let rank: usize = fields[1].parse().map_err(|_| err("bad rank"))?;
        let total: f64 = fields[2].parse().map_err(|_| err("bad total score"))?;
        let mut breakdown = ScoreBreakdown::default();
        for part in fields[3].split(';').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| err("bad score component"))?;
            breakdown.set(k, v.parse().map_err(|_| err("bad score component value"))?);
        }
        let tokens = fields[4].split_whitespace().map(str::to_string).collect();
        let entry = NBestEntry {
            tokens,
            total,
            breakdown,
        };
        match lists.last_mut() {
            Some(list) if list.utt_id == fields[0] => {
                if rank != list.entries.len() + 1 {
                    return Err(err("ranks must be consecutive"));
                }
                list.entries.push(entry);
            }
            _ => {
                if rank != 1 {
                    return Err(err("first rank of an utterance must be 1"));
                }
                lists.push(NBestList {
                    utt_id: fields[0].to_string(),
                    entries: vec![entry],
                    warnings: Vec::new(),
                });
            }
        }
    }
    Ok(lists)
}
