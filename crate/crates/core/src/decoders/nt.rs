//! Frame-synchronous (alignment-length synchronous) beam search with an
//! optional MMI alignment-score term.

use std::collections::HashMap;

use crate::alignment_score::AlignmentScorer;
use crate::decoders::hypothesis::{Hypothesis, MMI, NT};
use crate::decoders::nbest::{NBestEntry, NBestList};
use crate::decoders::provider::NtScoreProvider;
use crate::decoders::vocab::Vocabulary;
use crate::decoders::{beam_prune, DEFAULT_BEAM};
use crate::error::{Error, Result};
use crate::graphs::TokenId;
use crate::semiring::{log_sum_exp, weighted};

#[derive(Clone, Debug)]
pub struct NtConfig {
    pub beam: usize,
    pub u_max: usize,
    /// Defaults to `beam`.
    pub nbest: Option<usize>,
}

impl NtConfig {
    pub fn new(u_max: usize) -> Self {
        Self {
            beam: DEFAULT_BEAM,
            u_max,
            nbest: None,
        }
    }
}

/// Merges hypotheses with the same tokens and frame. The transducer
/// component is log-summed; every other component (including MMI) is
/// taken from the first member of the group.
pub fn combine_hypotheses(hyps: Vec<Hypothesis>) -> Vec<Hypothesis> {
    let mut groups: Vec<Vec<Hypothesis>> = Vec::new();
    let mut index: HashMap<(Vec<TokenId>, usize), usize> = HashMap::new();
    for h in hyps {
        let key = (h.tokens().to_vec(), h.frame());
        match index.get(&key) {
            Some(&g) => groups[g].push(h),
            None => {
                index.insert(key, groups.len());
                groups.push(vec![h]);
            }
        }
    }
    groups
        .into_iter()
        .map(|mut members| {
            if members.len() == 1 {
                return members.pop().expect("non-empty");
            }
            let nt = log_sum_exp(
                members
                    .iter()
                    .map(|m| m.breakdown().get(NT).unwrap_or(0.0))
                    .collect::<Vec<_>>(),
            );
            let mut rep = members.swap_remove(0);
            rep.set_component(NT, nt);
            rep
        })
        .collect()
}

pub fn nt_beam_search(
    provider: &dyn NtScoreProvider,
    mmi: Option<(&AlignmentScorer<'_, '_>, f64)>,
    vocab: &Vocabulary,
    cfg: &NtConfig,
    utt_id: &str,
) -> Result<NBestList> {
    if cfg.beam == 0 {
        return Err(Error::InvalidParameter("beam must be at least 1".into()));
    }
    if cfg.u_max == 0 {
        return Err(Error::InvalidParameter("U_max must be at least 1".into()));
    }
    let frames = provider.num_frames();
    let mmi = mmi.filter(|&(_, w)| w != 0.0);
    if let Some((ali, w)) = mmi {
        if !w.is_finite() {
            return Err(Error::InvalidParameter(format!("MMI weight {w} is not finite")));
        }
        if ali.scorer().num_frames() != frames {
            return Err(Error::InvalidParameter(format!(
                "MMI emissions have {} frames, transducer provider {frames}",
                ali.scorer().num_frames()
            )));
        }
    }
    let root_entry = mmi.map(|(a, _)| a.scorer().entry(&[])).transpose()?;

    let mut active = vec![Hypothesis::root(root_entry)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for _step in 1..=frames + cfg.u_max {
        if active.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for hyp in &active {
            let t = hyp.frame();
            let scores = provider.frame_scores(hyp.tokens(), t)?;
            if scores.tokens.len() != vocab.len() {
                return Err(Error::InvalidParameter(format!(
                    "transducer provider returned {} tokens, vocabulary has {}",
                    scores.tokens.len(),
                    vocab.len()
                )));
            }

            let mut blank = hyp.advanced();
            blank.add(NT, scores.blank);
            if let Some((ali, w)) = mmi {
                let entry = hyp.mmi_entry().expect("root entry set when MMI is active");
                blank.add(MMI, weighted(w, ali.blank_delta(entry, t)?));
            }
            if blank.score() > f64::NEG_INFINITY {
                if blank.frame() == frames {
                    finished.push(blank);
                } else {
                    next.push(blank);
                }
            }

            if hyp.tokens().len() < cfg.u_max {
                for token in vocab.ids() {
                    let mut entry = None;
                    let mut mmi_term = None;
                    if let Some((ali, w)) = mmi {
                        let parent = hyp.mmi_entry().expect("root entry set when MMI is active");
                        let (delta, child) = ali.token_delta(parent, token, t)?;
                        entry = Some(child);
                        mmi_term = Some(weighted(w, delta));
                    }
                    let mut child = hyp.extended(token, entry);
                    child.add(NT, scores.tokens[token.index()]);
                    if let Some(m) = mmi_term {
                        child.add(MMI, m);
                    }
                    if child.score() > f64::NEG_INFINITY {
                        next.push(child);
                    }
                }
            }
        }
        active = beam_prune(combine_hypotheses(next), cfg.beam);
    }

    let finished = combine_hypotheses(finished);
    let entries = finished
        .iter()
        .map(|h| {
            Ok(NBestEntry {
                tokens: vocab.symbols(h.tokens())?,
                total: h.score(),
                breakdown: h.breakdown().clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut list = NBestList::new(utt_id, entries);
    list.entries.truncate(cfg.nbest.unwrap_or(cfg.beam));
    if list.is_empty() {
        list.warnings
            .push("no hypothesis consumed every frame".to_string());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp(tokens: &[u32], frame: usize, nt: f64, mmi: f64) -> Hypothesis {
        let mut h = Hypothesis::root(None);
        for &t in tokens {
            h = h.extended(TokenId(t), None);
        }
        for _ in 0..frame {
            h = h.advanced();
        }
        h.add(NT, nt);
        h.add(MMI, mmi);
        h
    }

    #[test]
    fn merges_duplicates_by_log_sum() {
        let merged = combine_hypotheses(vec![
            hyp(&[0], 1, 0.3f64.ln(), -0.7),
            hyp(&[0], 1, 0.2f64.ln(), -0.7),
        ]);
        assert_eq!(merged.len(), 1);
        let nt = merged[0].breakdown().get(NT).unwrap();
        assert!((nt - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(merged[0].breakdown().get(MMI), Some(-0.7));
        assert!((merged[0].score() - (0.5f64.ln() - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn disjoint_sets_are_unchanged() {
        let input = vec![hyp(&[0], 1, -1.0, 0.0), hyp(&[1], 1, -2.0, 0.0), hyp(&[0], 2, -3.0, 0.0)];
        let out = combine_hypotheses(input.clone());
        assert_eq!(out.len(), 3);
        for (a, b) in out.iter().zip(&input) {
            assert_eq!(a.score(), b.score());
            assert_eq!(a.tokens(), b.tokens());
        }
    }
}
