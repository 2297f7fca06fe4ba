//! MMI prefix score for label-synchronous decoding.
//!
//! `S(W_1^u) = log sum_t P(O_1^t | G_num(W_1^u)) / P(O_1^t | G_den)`, with the
//! denominator series computed once per utterance and shared by every
//! hypothesis. Each prefix costs one numerator graph build and one forward
//! pass.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forward::{EmissionMatrix, ForwardGraph};
use crate::graphs::{build_ctc_topology, build_numerator_with_topology, Fsa, Lexicon, TokenId};
use crate::semiring::{log_delta, log_sum_exp};

/// `log P(O_1^t | G)` for `t = 0..=T`; index 0 is the zero-frame score.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixSeries {
    empty: f64,
    series: Vec<f64>,
}

impl PrefixSeries {
    /// Entries for `t = 1..=T`.
    pub fn series(&self) -> &[f64] {
        &self.series
    }

    pub fn num_frames(&self) -> usize {
        self.series.len()
    }

    /// Score after `t` frames, `t` in `0..=T`.
    pub fn at(&self, t: usize) -> f64 {
        if t == 0 {
            self.empty
        } else {
            self.series[t - 1]
        }
    }

    fn compute(g: &Fsa, e: &EmissionMatrix) -> Result<Self> {
        let fg = ForwardGraph::new(g, e.num_units())?;
        let state = fg.run(e);
        Ok(Self {
            empty: state.empty_score(),
            series: state.into_snapshots(),
        })
    }
}

/// Denominator prefix series of one utterance. Every entry for `t >= 1` is
/// finite.
pub fn precompute_denominator_series(g_den: &Fsa, e: &EmissionMatrix) -> Result<PrefixSeries> {
    let series = PrefixSeries::compute(g_den, e)?;
    if let Some(t) = series.series.iter().position(|v| !v.is_finite()) {
        return Err(Error::DenominatorInfeasible { frames: t + 1 });
    }
    Ok(series)
}

/// Per-hypothesis cache entry: the numerator series of `G_num(W_1^u)` and
/// the prefix score derived from it.
#[derive(Clone, Debug)]
pub struct PrefixEntry {
    tokens: Vec<TokenId>,
    numerator: Arc<PrefixSeries>,
    prefix_score: f64,
}

impl PrefixEntry {
    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn numerator(&self) -> &PrefixSeries {
        &self.numerator
    }

    /// `S^pref(W_1^u, O)`; `-inf` if the prefix cannot fit in `T` frames.
    pub fn prefix_score(&self) -> f64 {
        self.prefix_score
    }
}

/// Shared, read-only MMI scoring context for one utterance.
#[derive(Debug)]
pub struct MmiScorer<'a> {
    lexicon: &'a Lexicon,
    emissions: &'a EmissionMatrix,
    topology: Fsa,
    denominator: Arc<PrefixSeries>,
    denominator_passes: AtomicUsize,
    numerator_passes: AtomicUsize,
}

impl<'a> MmiScorer<'a> {
    /// Runs the denominator forward pass once for this utterance.
    pub fn new(lexicon: &'a Lexicon, g_den: &Fsa, emissions: &'a EmissionMatrix) -> Result<Self> {
        let den = precompute_denominator_series(g_den, emissions)?;
        let scorer = Self::with_denominator(lexicon, emissions, Arc::new(den))?;
        scorer.denominator_passes.store(1, Ordering::Relaxed);
        Ok(scorer)
    }

    /// Reuses an already computed denominator series.
    pub fn with_denominator(
        lexicon: &'a Lexicon,
        emissions: &'a EmissionMatrix,
        denominator: Arc<PrefixSeries>,
    ) -> Result<Self> {
        if denominator.num_frames() != emissions.num_frames() {
            return Err(Error::InvalidParameter(format!(
                "denominator series covers {} frames, emissions have {}",
                denominator.num_frames(),
                emissions.num_frames()
            )));
        }
        if lexicon.num_units() > emissions.num_units() {
            return Err(Error::InvalidEmissions(format!(
                "lexicon has {} phone units, emissions only {}",
                lexicon.num_units(),
                emissions.num_units()
            )));
        }
        Ok(Self {
            lexicon,
            emissions,
            topology: build_ctc_topology(lexicon.num_units())?,
            denominator,
            denominator_passes: AtomicUsize::new(0),
            numerator_passes: AtomicUsize::new(0),
        })
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lexicon
    }

    pub fn num_frames(&self) -> usize {
        self.emissions.num_frames()
    }

    pub fn denominator(&self) -> &Arc<PrefixSeries> {
        &self.denominator
    }

    /// Denominator forward passes run by this scorer (1 or 0).
    pub fn denominator_passes(&self) -> usize {
        self.denominator_passes.load(Ordering::Relaxed)
    }

    /// Numerator forward passes run so far.
    pub fn numerator_passes(&self) -> usize {
        self.numerator_passes.load(Ordering::Relaxed)
    }

    /// Builds `G_num(tokens)` and runs its forward pass once.
    pub fn entry(&self, tokens: &[TokenId]) -> Result<PrefixEntry> {
        let g = build_numerator_with_topology(tokens, self.lexicon, &self.topology)?;
        let numerator = PrefixSeries::compute(&g, self.emissions)?;
        self.numerator_passes.fetch_add(1, Ordering::Relaxed);
        let prefix_score =
            log_sum_exp((1..=self.num_frames()).map(|t| self.ratio(&numerator, t)));
        Ok(PrefixEntry {
            tokens: tokens.to_vec(),
            numerator: Arc::new(numerator),
            prefix_score,
        })
    }

    fn ratio(&self, numerator: &PrefixSeries, t: usize) -> f64 {
        log_delta(numerator.at(t), self.denominator.at(t))
    }

    /// `log P(O_1^t | G_num) - log P(O_1^t | G_den)`, `t` in `0..=T`.
    pub fn log_ratio(&self, entry: &PrefixEntry, t: usize) -> Result<f64> {
        if t > self.num_frames() {
            return Err(Error::FrameOutOfRange {
                t,
                min: 0,
                max: self.num_frames(),
            });
        }
        Ok(self.ratio(&entry.numerator, t))
    }

    /// Extends `parent` by `token`: returns
    /// `S^pref(W_1^u) - S^pref(W_1^{u-1})` and the child's entry.
    pub fn token_log_posterior(
        &self,
        parent: &PrefixEntry,
        token: TokenId,
    ) -> Result<(f64, PrefixEntry)> {
        if self.lexicon.pronunciation(token).is_none() {
            return Err(Error::UnknownTokenId(token.0));
        }
        let mut tokens = parent.tokens.clone();
        tokens.push(token);
        let child = self.entry(&tokens)?;
        Ok((log_delta(child.prefix_score, parent.prefix_score), child))
    }

    /// Log-posterior of ending the hypothesis here: the complete-utterance
    /// ratio at `T` minus the prefix score.
    pub fn end_log_posterior(&self, entry: &PrefixEntry) -> f64 {
        log_delta(
            self.ratio(&entry.numerator, self.num_frames()),
            entry.prefix_score,
        )
    }
}

/// `S^pref(tokens, O)` computed from scratch.
pub fn mmi_prefix_score(tokens: &[TokenId], scorer: &MmiScorer<'_>) -> Result<f64> {
    Ok(scorer.entry(tokens)?.prefix_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::forward_prefix_series;
    use crate::graphs::{build_denominator_graph, BigramLm};

    fn setup() -> (Lexicon, Fsa, EmissionMatrix) {
        let lex = Lexicon::parse("phones: sil a b\nx a\ny b\n").unwrap();
        let den = build_denominator_graph(&BigramLm::uniform(4, 1).unwrap()).unwrap();
        let e = EmissionMatrix::from_logits(&[
            vec![0.0, 0.0, 2.0, 0.0],
            vec![1.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 2.0],
        ])
        .unwrap();
        (lex, den, e)
    }

    #[test]
    fn denominator_series_is_the_forward_series() {
        let (_, den, e) = setup();
        let s = precompute_denominator_series(&den, &e).unwrap();
        assert_eq!(s.series(), forward_prefix_series(&den, &e).unwrap().as_slice());
        let one = precompute_denominator_series(&den, &e.truncated(1)).unwrap();
        assert_eq!(one.series().len(), 1);
    }

    #[test]
    fn telescoping_is_exact() {
        let (lex, den, e) = setup();
        let scorer = MmiScorer::new(&lex, &den, &e).unwrap();
        let root = scorer.entry(&[]).unwrap();
        let mut entry = root.clone();
        let mut total = 0.0;
        for tok in [TokenId(0), TokenId(1)] {
            let (d, child) = scorer.token_log_posterior(&entry, tok).unwrap();
            total += d;
            entry = child;
        }
        let expected = entry.prefix_score() - root.prefix_score();
        assert!((total - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn repeated_query_is_pure() {
        let (lex, den, e) = setup();
        let scorer = MmiScorer::new(&lex, &den, &e).unwrap();
        let root = scorer.entry(&[]).unwrap();
        let (a, _) = scorer.token_log_posterior(&root, TokenId(0)).unwrap();
        let (b, _) = scorer.token_log_posterior(&root, TokenId(0)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(scorer.denominator_passes(), 1);
        assert_eq!(scorer.numerator_passes(), 3);
    }

    #[test]
    fn too_long_prefix_is_neg_inf_not_error() {
        let (lex, den, e) = setup();
        let scorer = MmiScorer::new(&lex, &den, &e).unwrap();
        let x = TokenId(0);
        let s = mmi_prefix_score(&[x, x, x], &scorer).unwrap();
        assert_eq!(s, f64::NEG_INFINITY);
        let (d, _) = scorer
            .token_log_posterior(&scorer.entry(&[x, x]).unwrap(), x)
            .unwrap();
        assert_eq!(d, f64::NEG_INFINITY);
    }

    #[test]
    fn unknown_token_is_an_error() {
        let (lex, den, e) = setup();
        let scorer = MmiScorer::new(&lex, &den, &e).unwrap();
        let root = scorer.entry(&[]).unwrap();
        assert!(scorer.token_log_posterior(&root, TokenId(7)).is_err());
    }
}
