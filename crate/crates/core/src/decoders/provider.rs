//! Score sources for beam search. The neural providers (attention decoder,
//! transducer joint network) live outside this crate; these implementations
//! are table- or emission-driven stand-ins with the same contract.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::forward::{EmissionMatrix, NORMALIZATION_TOLERANCE};
use crate::graphs::TokenId;
use crate::semiring::{log_add, log_delta, log_sum_exp};

/// Log-distribution over the next output symbol in label-synchronous search.
#[derive(Clone, Debug, PartialEq)]
pub struct NextTokenScores {
    /// Indexed by token id.
    pub tokens: Vec<f64>,
    pub eos: f64,
}

impl NextTokenScores {
    pub fn log_mass(&self) -> f64 {
        log_sum_exp(self.tokens.iter().copied().chain([self.eos]))
    }
}

/// Blank and token log-posteriors at one frame in frame-synchronous search.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameScores {
    pub blank: f64,
    /// Indexed by token id.
    pub tokens: Vec<f64>,
}

/// `log p(w_u | W_1^{u-1}, O)` for every `w_u` in `V ∪ {<eos>}`.
pub trait AedScoreProvider {
    fn next_token_scores(&self, prefix: &[TokenId]) -> Result<NextTokenScores>;
}

/// `log p_t(k | W_1^u, O)` for `k` in `{<blk>} ∪ V`.
pub trait NtScoreProvider {
    fn num_frames(&self) -> usize;
    fn frame_scores(&self, prefix: &[TokenId], frame: usize) -> Result<FrameScores>;
}

fn check_normalized(mass: f64, what: &str) -> Result<()> {
    if (mass - 0.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "{what} has log-mass {mass}, expected 0"
        )));
    }
    Ok(())
}

/// Explicit conditional distributions keyed by prefix, with a fallback for
/// prefixes not in the table.
#[derive(Clone, Debug)]
pub struct TableAedProvider {
    vocab_size: usize,
    fallback: NextTokenScores,
    table: HashMap<Vec<TokenId>, NextTokenScores>,
}

impl TableAedProvider {
    pub fn new(vocab_size: usize, fallback: NextTokenScores) -> Result<Self> {
        let provider = Self {
            vocab_size,
            fallback: fallback.clone(),
            table: HashMap::new(),
        };
        provider.validate(&fallback)?;
        Ok(provider)
    }

    /// Uniform over `V ∪ {<eos>}` for every prefix.
    pub fn uniform(vocab_size: usize) -> Self {
        let lp = -((vocab_size + 1) as f64).ln();
        Self {
            vocab_size,
            fallback: NextTokenScores {
                tokens: vec![lp; vocab_size],
                eos: lp,
            },
            table: HashMap::new(),
        }
    }

    fn validate(&self, scores: &NextTokenScores) -> Result<()> {
        if scores.tokens.len() != self.vocab_size {
            return Err(Error::InvalidParameter(format!(
                "distribution has {} tokens, vocabulary has {}",
                scores.tokens.len(),
                self.vocab_size
            )));
        }
        check_normalized(scores.log_mass(), "next-token distribution")
    }

    pub fn insert(&mut self, prefix: Vec<TokenId>, scores: NextTokenScores) -> Result<()> {
        self.validate(&scores)?;
        self.table.insert(prefix, scores);
        Ok(())
    }
}

impl AedScoreProvider for TableAedProvider {
    fn next_token_scores(&self, prefix: &[TokenId]) -> Result<NextTokenScores> {
        Ok(self.table.get(prefix).unwrap_or(&self.fallback).clone())
    }
}

/// CTC prefix scorer over token-level emissions (column 0 is blank, token
/// `k` is column `k + 1`).
///
/// `log p(c | g) = psi(g + c) - psi(g)` where `psi` is the CTC prefix
/// probability; `log p(<eos> | g)` uses the complete-sequence probability.
#[derive(Clone, Copy, Debug)]
pub struct CtcPrefixScorer<'e> {
    emissions: &'e EmissionMatrix,
}

#[derive(Clone, Debug)]
struct CtcPrefixState {
    /// Paths ending in a non-blank, per frame.
    r_nonblank: Vec<f64>,
    /// Paths ending in blank, per frame.
    r_blank: Vec<f64>,
    psi: f64,
    last: Option<TokenId>,
}

impl<'e> CtcPrefixScorer<'e> {
    pub fn new(emissions: &'e EmissionMatrix) -> Result<Self> {
        if emissions.num_frames() == 0 {
            return Err(Error::InvalidEmissions("CTC scoring needs at least one frame".into()));
        }
        Ok(Self { emissions })
    }

    pub fn vocab_size(&self) -> usize {
        self.emissions.num_units() - 1
    }

    fn y(&self, t: usize, token: TokenId) -> f64 {
        self.emissions.get(t, token.index() + 1)
    }

    fn empty_state(&self) -> CtcPrefixState {
        let frames = self.emissions.num_frames();
        let mut r_blank = Vec::with_capacity(frames);
        let mut acc = 0.0;
        for t in 0..frames {
            acc += self.emissions.get(t, 0);
            r_blank.push(acc);
        }
        CtcPrefixState {
            r_nonblank: vec![f64::NEG_INFINITY; frames],
            r_blank,
            psi: 0.0,
            last: None,
        }
    }

    fn extend(&self, g: &CtcPrefixState, c: TokenId) -> CtcPrefixState {
        let frames = self.emissions.num_frames();
        let mut r_n = vec![f64::NEG_INFINITY; frames];
        let mut r_b = vec![f64::NEG_INFINITY; frames];
        if g.last.is_none() {
            r_n[0] = self.y(0, c);
        }
        let mut psi = r_n[0];
        for t in 1..frames {
            let from_nonblank = if g.last == Some(c) {
                f64::NEG_INFINITY
            } else {
                g.r_nonblank[t - 1]
            };
            let phi = log_add(g.r_blank[t - 1], from_nonblank);
            r_n[t] = log_add(r_n[t - 1], phi) + self.y(t, c);
            r_b[t] = log_add(r_b[t - 1], r_n[t - 1]) + self.emissions.get(t, 0);
            psi = log_add(psi, phi + self.y(t, c));
        }
        CtcPrefixState {
            r_nonblank: r_n,
            r_blank: r_b,
            psi,
            last: Some(c),
        }
    }

    fn state(&self, prefix: &[TokenId]) -> CtcPrefixState {
        prefix
            .iter()
            .fold(self.empty_state(), |g, &c| self.extend(&g, c))
    }

    /// `log` of the total probability of label paths whose collapse starts with `prefix`.
    pub fn prefix_log_prob(&self, prefix: &[TokenId]) -> f64 {
        self.state(prefix).psi
    }

    /// `log P(prefix | O)` for `prefix` as a complete sequence.
    pub fn full_log_prob(&self, seq: &[TokenId]) -> f64 {
        let g = self.state(seq);
        let last = self.emissions.num_frames() - 1;
        log_add(g.r_nonblank[last], g.r_blank[last])
    }
}

impl AedScoreProvider for CtcPrefixScorer<'_> {
    fn next_token_scores(&self, prefix: &[TokenId]) -> Result<NextTokenScores> {
        let g = self.state(prefix);
        let tokens = (0..self.vocab_size() as u32)
            .map(|c| log_delta(self.extend(&g, TokenId(c)).psi, g.psi))
            .collect();
        let last = self.emissions.num_frames() - 1;
        let eos = log_delta(log_add(g.r_nonblank[last], g.r_blank[last]), g.psi);
        Ok(NextTokenScores { tokens, eos })
    }
}

/// Context-independent transducer stand-in: frame `t` of a token-level
/// emission matrix (column 0 blank) gives the blank/token distribution
/// regardless of the prefix.
#[derive(Clone, Copy, Debug)]
pub struct FrameTableNtProvider<'e> {
    emissions: &'e EmissionMatrix,
}

impl<'e> FrameTableNtProvider<'e> {
    pub fn new(emissions: &'e EmissionMatrix) -> Result<Self> {
        if emissions.num_units() < 2 {
            return Err(Error::InvalidEmissions(
                "token emissions need a blank column and at least one token".into(),
            ));
        }
        Ok(Self { emissions })
    }
}

impl NtScoreProvider for FrameTableNtProvider<'_> {
    fn num_frames(&self) -> usize {
        self.emissions.num_frames()
    }

    fn frame_scores(&self, _prefix: &[TokenId], frame: usize) -> Result<FrameScores> {
        if frame >= self.num_frames() {
            return Err(Error::FrameOutOfRange {
                t: frame,
                min: 0,
                max: self.num_frames().saturating_sub(1),
            });
        }
        let row = self.emissions.row(frame);
        Ok(FrameScores {
            blank: row[0],
            tokens: row[1..].to_vec(),
        })
    }
}

/// Closure-backed transducer provider, handy for context-dependent toys.
pub struct FnNtProvider<F> {
    frames: usize,
    f: F,
}

impl<F> FnNtProvider<F>
where
    F: Fn(&[TokenId], usize) -> FrameScores,
{
    pub fn new(frames: usize, f: F) -> Self {
        Self { frames, f }
    }
}

impl<F> NtScoreProvider for FnNtProvider<F>
where
    F: Fn(&[TokenId], usize) -> FrameScores,
{
    fn num_frames(&self) -> usize {
        self.frames
    }

    fn frame_scores(&self, prefix: &[TokenId], frame: usize) -> Result<FrameScores> {
        Ok((self.f)(prefix, frame))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ctc_prefix_distribution_is_normalized() {
        let e = EmissionMatrix::from_logits(&[
            vec![0.5, 1.0, -0.3],
            vec![0.1, 0.2, 0.9],
            vec![1.2, -0.4, 0.0],
        ])
        .unwrap();
        let ctc = CtcPrefixScorer::new(&e).unwrap();
        for prefix in [vec![], vec![TokenId(0)], vec![TokenId(1), TokenId(1)]] {
            let s = ctc.next_token_scores(&prefix).unwrap();
            if ctc.prefix_log_prob(&prefix) > f64::NEG_INFINITY {
                assert!(s.log_mass().abs() < 1e-12, "{prefix:?}: {}", s.log_mass());
            }
        }
    }

    #[test]
    fn table_provider_validates() {
        let mut p = TableAedProvider::uniform(2);
        let bad = NextTokenScores {
            tokens: vec![-1.0, -1.0],
            eos: -1.0,
        };
        assert!(p.insert(vec![], bad).is_err());
        let good = NextTokenScores {
            tokens: vec![0.5f64.ln(), 0.25f64.ln()],
            eos: 0.25f64.ln(),
        };
        p.insert(vec![TokenId(1)], good.clone()).unwrap();
        assert_eq!(p.next_token_scores(&[TokenId(1)]).unwrap(), good);
        assert!(p.next_token_scores(&[]).unwrap().log_mass().abs() < 1e-12);
    }

    #[test]
    fn frame_table_out_of_range() {
        let e = EmissionMatrix::from_rows(&[vec![0.0, f64::NEG_INFINITY]]).unwrap();
        let p = FrameTableNtProvider::new(&e).unwrap();
        assert!(p.frame_scores(&[], 1).is_err());
        assert_eq!(p.frame_scores(&[], 0).unwrap().blank, 0.0);
    }
}
