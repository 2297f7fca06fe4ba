//! Beam search, hypothesis combination, N-best rescoring and risk utilities.

mod aed;
mod hypothesis;
mod nbest;
mod nt;
mod provider;
mod rescore;
mod risk;
mod vocab;

pub use aed::{aed_beam_search, AedConfig, AedProviders, StopCondition};
pub use hypothesis::{Hypothesis, ScoreBreakdown, ATT, CTC, LFMMI_RESCORE, MMI, NT};
pub use nbest::{format_nbest, parse_nbest, NBestEntry, NBestList, NBEST_HEADER};
pub use nt::{combine_hypotheses, nt_beam_search, NtConfig};
pub use provider::{
    AedScoreProvider, CtcPrefixScorer, FnNtProvider, FrameScores, FrameTableNtProvider,
    NextTokenScores, NtScoreProvider, TableAedProvider,
};
pub use rescore::{lfmmi_rescore, rescore_with_terms};
pub use risk::{approx_bayesian_risk, edit_distance, DEFAULT_RISK_EPSILON};
pub use vocab::{Vocabulary, BLK, EOS, SOS};

pub const DEFAULT_BEAM: usize = 10;
pub const DEFAULT_MMI_WEIGHT: f64 = 0.2;

/// Keeps the `beam` best hypotheses; equal scores keep insertion order.
pub(crate) fn beam_prune(mut hyps: Vec<Hypothesis>, beam: usize) -> Vec<Hypothesis> {
    hyps.sort_by(|a, b| b.score().total_cmp(&a.score()));
    hyps.truncate(beam);
    hyps
}
