//! Label-synchronous beam search with an optional MMI prefix-score term.

use log::warn;

use crate::decoders::hypothesis::{Hypothesis, ATT, CTC, MMI};
use crate::decoders::nbest::{NBestEntry, NBestList};
use crate::decoders::provider::{AedScoreProvider, NextTokenScores};
use crate::decoders::vocab::Vocabulary;
use crate::decoders::{beam_prune, DEFAULT_BEAM};
use crate::error::{Error, Result};
use crate::prefix_score::MmiScorer;
use crate::semiring::weighted;

/// When to end the search before the length cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StopCondition {
    /// Stop once the best finished score is at least the best active score.
    /// Exact when every weighted contribution is non-positive.
    #[default]
    BestFinished,
    /// Run until the length cap or until no hypothesis is active.
    MaxLength,
}

#[derive(Clone, Debug)]
pub struct AedConfig {
    pub beam: usize,
    /// Maximum tokens before `<eos>` is forced.
    pub max_len: usize,
    /// Defaults to `beam`.
    pub nbest: Option<usize>,
    pub stop: StopCondition,
}

impl AedConfig {
    pub fn new(max_len: usize) -> Self {
        Self {
            beam: DEFAULT_BEAM,
            max_len,
            nbest: None,
            stop: StopCondition::default(),
        }
    }
}

/// Score sources with their interpolation weights. A source with weight 0 is
/// never queried.
#[derive(Default)]
pub struct AedProviders<'p, 'a> {
    pub att: Option<(&'p dyn AedScoreProvider, f64)>,
    pub ctc: Option<(&'p dyn AedScoreProvider, f64)>,
    pub mmi: Option<(&'p MmiScorer<'a>, f64)>,
}

impl<'p, 'a> AedProviders<'p, 'a> {
    fn external(&self) -> impl Iterator<Item = (&'static str, &'p dyn AedScoreProvider, f64)> {
        [(ATT, self.att), (CTC, self.ctc)]
            .into_iter()
            .filter_map(|(name, p)| p.filter(|&(_, w)| w != 0.0).map(|(p, w)| (name, p, w)))
    }

    fn active_mmi(&self) -> Option<(&'p MmiScorer<'a>, f64)> {
        self.mmi.filter(|&(_, w)| w != 0.0)
    }
}

pub fn aed_beam_search(
    providers: &AedProviders<'_, '_>,
    vocab: &Vocabulary,
    cfg: &AedConfig,
    utt_id: &str,
) -> Result<NBestList> {
    if cfg.beam == 0 {
        return Err(Error::InvalidParameter("beam must be at least 1".into()));
    }
    if providers.att.is_none() && providers.ctc.is_none() && providers.mmi.is_none() {
        return Err(Error::InvalidParameter("no score provider given".into()));
    }
    for (w, name) in [
        (providers.att.map(|p| p.1), ATT),
        (providers.ctc.map(|p| p.1), CTC),
        (providers.mmi.map(|p| p.1), MMI),
    ] {
        if let Some(w) = w.filter(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} weight {w} is not finite")));
        }
    }
    let mmi = providers.active_mmi();
    let root_entry = mmi.map(|(s, _)| s.entry(&[])).transpose()?;

    let mut active = vec![Hypothesis::root(root_entry)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut step = 1;
    while !active.is_empty() && step <= cfg.max_len + 1 {
        if cfg.stop == StopCondition::BestFinished {
            let best_finished = finished.iter().map(Hypothesis::score).fold(f64::NEG_INFINITY, f64::max);
            let best_active = active.iter().map(Hypothesis::score).fold(f64::NEG_INFINITY, f64::max);
            if !finished.is_empty() && best_finished >= best_active {
                break;
            }
        }
        let allow_tokens = step <= cfg.max_len;
        let mut expanded = Vec::new();
        for hyp in &active {
            let scores: Vec<(&str, f64, NextTokenScores)> = providers
                .external()
                .map(|(name, p, w)| Ok((name, w, p.next_token_scores(hyp.tokens())?)))
                .collect::<Result<_>>()?;
            for (name, _, s) in &scores {
                if s.tokens.len() != vocab.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{name} provider returned {} tokens, vocabulary has {}",
                        s.tokens.len(),
                        vocab.len()
                    )));
                }
            }
            if allow_tokens {
                for token in vocab.ids() {
                    let mut entry = None;
                    let mut mmi_term = None;
                    if let Some((scorer, w)) = mmi {
                        let parent = hyp.mmi_entry().expect("root entry set when MMI is active");
                        let (delta, child) = scorer.token_log_posterior(parent, token)?;
                        entry = Some(child);
                        mmi_term = Some(weighted(w, delta));
                    }
                    let mut child = hyp.extended(token, entry);
                    for (name, w, s) in &scores {
                        child.add(name, weighted(*w, s.tokens[token.index()]));
                    }
                    if let Some(m) = mmi_term {
                        child.add(MMI, m);
                    }
                    if child.score() > f64::NEG_INFINITY {
                        expanded.push(child);
                    }
                }
            }
            let mut done = hyp.clone();
            for (name, w, s) in &scores {
                done.add(name, weighted(*w, s.eos));
            }
            if let Some((scorer, w)) = mmi {
                let entry = hyp.mmi_entry().expect("root entry set when MMI is active");
                done.add(MMI, weighted(w, scorer.end_log_posterior(entry)));
            }
            if done.score() > f64::NEG_INFINITY {
                finished.push(done);
            }
        }
        active = beam_prune(expanded, cfg.beam);
        step += 1;
    }

    let nbest = cfg.nbest.unwrap_or(cfg.beam);
    let mut warnings = Vec::new();
    let pool = if finished.is_empty() {
        warn!("{utt_id}: no finished hypothesis; returning active ones");
        warnings.push("no finished hypothesis; list holds unfinished hypotheses".to_string());
        active
    } else {
        finished
    };
    let entries = pool
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
    list.entries.truncate(nbest);
    list.warnings = warnings;
    Ok(list)
}
