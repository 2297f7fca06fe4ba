//! MMI alignment score for frame-synchronous decoding.
//!
//! `S^ali(W_1^u, t) = max_{0 <= i <= tau} log P(W_1^u | O_1^{t+i})`, with the
//! look-ahead window clamped at the last frame. Frame index `t` counts
//! consumed frames, so `t = 0` (nothing consumed yet) is valid and uses the
//! zero-frame scores of both graphs.

use crate::error::{Error, Result};
use crate::graphs::TokenId;
use crate::prefix_score::{MmiScorer, PrefixEntry};
use crate::semiring::log_delta;

pub const DEFAULT_LOOKAHEAD: usize = 3;

#[derive(Clone, Copy, Debug)]
pub struct AlignmentScorer<'s, 'a> {
    scorer: &'s MmiScorer<'a>,
    lookahead: usize,
}

impl<'s, 'a> AlignmentScorer<'s, 'a> {
    pub fn new(scorer: &'s MmiScorer<'a>, lookahead: usize) -> Self {
        Self { scorer, lookahead }
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn scorer(&self) -> &'s MmiScorer<'a> {
        self.scorer
    }

    fn check_frame(&self, t: usize) -> Result<()> {
        let max = self.scorer.num_frames();
        if t > max {
            return Err(Error::FrameOutOfRange { t, min: 0, max });
        }
        Ok(())
    }

    /// Look-ahead maximum of the prefix log-posterior from frame `t`.
    pub fn score(&self, entry: &PrefixEntry, t: usize) -> Result<f64> {
        self.check_frame(t)?;
        let last = (t + self.lookahead).min(self.scorer.num_frames());
        let mut best = f64::NEG_INFINITY;
        for k in t..=last {
            best = best.max(self.scorer.log_ratio(entry, k)?);
        }
        Ok(best)
    }

    /// Change in the score when a blank consumes frame `t + 1`.
    pub fn blank_delta(&self, entry: &PrefixEntry, t: usize) -> Result<f64> {
        let max = self.scorer.num_frames();
        if t >= max {
            return Err(Error::FrameOutOfRange {
                t,
                min: 0,
                max: max.saturating_sub(1),
            });
        }
        Ok(log_delta(self.score(entry, t + 1)?, self.score(entry, t)?))
    }

    /// Change in the score when `token` is emitted at frame `t`, plus the
    /// child's cache entry (one numerator forward pass).
    pub fn token_delta(
        &self,
        entry: &PrefixEntry,
        token: TokenId,
        t: usize,
    ) -> Result<(f64, PrefixEntry)> {
        self.check_frame(t)?;
        let (_, child) = self.scorer.token_log_posterior(entry, token)?;
        let delta = log_delta(self.score(&child, t)?, self.score(entry, t)?);
        Ok((delta, child))
    }
}

/// Free-function form of [`AlignmentScorer::score`].
pub fn mmi_alignment_score(
    scorer: &MmiScorer<'_>,
    entry: &PrefixEntry,
    t: usize,
    lookahead: usize,
) -> Result<f64> {
    AlignmentScorer::new(scorer, lookahead).score(entry, t)
}
