//! Streaming forward pass and forward-backward occupation posteriors.

use crate::error::{Error, Result};
use crate::forward::emissions::{EmissionMatrix, FrameMatrix};
use crate::graphs::Fsa;
use crate::semiring::log_sum_exp;

/// An [`Fsa`] indexed for the forward recursion: incoming arcs grouped by
/// destination state, in original arc order.
#[derive(Clone, Debug)]
pub struct ForwardGraph<'a> {
    fsa: &'a Fsa,
    in_offsets: Vec<usize>,
    in_arcs: Vec<usize>,
    finals: Vec<f64>,
}

impl<'a> ForwardGraph<'a> {
    /// Checks that every label indexes into an emission row of `num_units`.
    pub fn new(fsa: &'a Fsa, num_units: usize) -> Result<Self> {
        if let Some(label) = fsa.max_label().filter(|&l| l as usize >= num_units) {
            return Err(Error::LabelOutOfRange { label, num_units });
        }
        let n = fsa.num_states();
        let mut counts = vec![0usize; n + 1];
        for a in fsa.arcs() {
            counts[a.dst as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut in_arcs = vec![0; fsa.arcs().len()];
        for (i, a) in fsa.arcs().iter().enumerate() {
            in_arcs[fill[a.dst as usize]] = i;
            fill[a.dst as usize] += 1;
        }
        Ok(Self {
            fsa,
            in_offsets: counts,
            in_arcs,
            finals: fsa.final_weights(),
        })
    }

    pub fn fsa(&self) -> &'a Fsa {
        self.fsa
    }

    /// State before any frame has been consumed.
    pub fn initial_state(&self) -> PrefixForwardState {
        let mut alpha = vec![f64::NEG_INFINITY; self.fsa.num_states()];
        alpha[self.fsa.start() as usize] = 0.0;
        let empty_score = self.terminal_score(&alpha);
        PrefixForwardState {
            alpha,
            snapshots: Vec::new(),
            empty_score,
        }
    }

    /// Consumes one emission row and records `log P(O_1^t | G)`.
    pub fn advance(&self, state: &mut PrefixForwardState, row: &[f64]) {
        let arcs = self.fsa.arcs();
        let mut next = vec![f64::NEG_INFINITY; self.fsa.num_states()];
        let mut scratch = Vec::new();
        for (dst, slot) in next.iter_mut().enumerate() {
            let incoming = &self.in_arcs[self.in_offsets[dst]..self.in_offsets[dst + 1]];
            scratch.clear();
            scratch.extend(incoming.iter().map(|&i| {
                let a = &arcs[i];
                state.alpha[a.src as usize] + a.weight + row[a.label as usize]
            }));
            *slot = log_sum_exp(scratch.iter().copied());
        }
        state.alpha = next;
        let snap = self.terminal_score(&state.alpha);
        state.snapshots.push(snap);
    }

    fn terminal_score(&self, alpha: &[f64]) -> f64 {
        log_sum_exp(alpha.iter().zip(&self.finals).map(|(a, f)| a + f))
    }

    /// Runs all frames of `e` from the initial state.
    pub fn run(&self, e: &EmissionMatrix) -> PrefixForwardState {
        let mut state = self.initial_state();
        for t in 0..e.num_frames() {
            self.advance(&mut state, e.row(t));
        }
        state
    }
}

/// Forward scores after `t` frames plus the per-frame snapshot series
/// `log P(O_1^k | G)` for `k = 1..=t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixForwardState {
    alpha: Vec<f64>,
    snapshots: Vec<f64>,
    empty_score: f64,
}

impl PrefixForwardState {
    /// Frames consumed so far.
    pub fn frame(&self) -> usize {
        self.snapshots.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn snapshots(&self) -> &[f64] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<f64> {
        self.snapshots
    }

    /// Zero-frame score: the start state's final weight, `-inf` if not final.
    pub fn empty_score(&self) -> f64 {
        self.empty_score
    }

    /// `log P(O_1^t | G)` for the current frame, or the zero-frame score.
    pub fn current_score(&self) -> f64 {
        self.snapshots.last().copied().unwrap_or(self.empty_score)
    }
}

/// `log P(O_1^T | G)`; `-inf` if the graph admits no length-`T` path.
pub fn forward_score(g: &Fsa, e: &EmissionMatrix) -> Result<f64> {
    let fg = ForwardGraph::new(g, e.num_units())?;
    Ok(fg.run(e).current_score())
}

/// `log P(O_1^t | G)` for `t = 1..=T` from a single forward pass.
pub fn forward_prefix_series(g: &Fsa, e: &EmissionMatrix) -> Result<Vec<f64>> {
    let fg = ForwardGraph::new(g, e.num_units())?;
    Ok(fg.run(e).into_snapshots())
}

/// Total log score plus per-frame, per-label occupation posteriors.
#[derive(Clone, Debug)]
pub struct ForwardBackward {
    pub log_likelihood: f64,
    pub occupation: FrameMatrix,
}

/// Forward-backward over `g`. Entry `(t, p)` of the occupation matrix is the
/// posterior probability that an accepted path uses label `p` at frame `t`,
/// which equals `d log P(O|G) / d e[t][p]`.
pub fn forward_backward(g: &Fsa, e: &EmissionMatrix) -> Result<ForwardBackward> {
    let fg = ForwardGraph::new(g, e.num_units())?;
    let frames = e.num_frames();
    let n = g.num_states();

    let mut alphas = Vec::with_capacity(frames + 1);
    let mut state = fg.initial_state();
    alphas.push(state.alpha().to_vec());
    for t in 0..frames {
        fg.advance(&mut state, e.row(t));
        alphas.push(state.alpha().to_vec());
    }
    let log_z = state.current_score();
    if log_z == f64::NEG_INFINITY {
        return Err(Error::NoPath { frames });
    }

    let mut out_offsets = vec![0usize; n + 1];
    for a in g.arcs() {
        out_offsets[a.src as usize + 1] += 1;
    }
    for i in 0..n {
        out_offsets[i + 1] += out_offsets[i];
    }
    let mut fill = out_offsets.clone();
    let mut out_arcs = vec![0usize; g.arcs().len()];
    for (i, a) in g.arcs().iter().enumerate() {
        out_arcs[fill[a.src as usize]] = i;
        fill[a.src as usize] += 1;
    }

    let mut occupation = FrameMatrix::zeros(frames, e.num_units());
    let mut beta = fg.finals.clone();
    let mut scratch = Vec::new();
    for t in (0..frames).rev() {
        let row = e.row(t);
        let alpha = &alphas[t];
        for a in g.arcs() {
            let lp = alpha[a.src as usize] + a.weight + row[a.label as usize]
                + beta[a.dst as usize]
                - log_z;
            if lp != f64::NEG_INFINITY {
                occupation.add_at(t, a.label as usize, lp.exp());
            }
        }
        let mut prev = vec![f64::NEG_INFINITY; n];
        for (src, slot) in prev.iter_mut().enumerate() {
            scratch.clear();
            scratch.extend(out_arcs[out_offsets[src]..out_offsets[src + 1]].iter().map(|&i| {
                let a = &g.arcs()[i];
                a.weight + row[a.label as usize] + beta[a.dst as usize]
            }));
            *slot = log_sum_exp(scratch.iter().copied());
        }
        beta = prev;
    }
    Ok(ForwardBackward {
        log_likelihood: log_z,
        occupation,
    })
}

/// Occupation posteriors of `g` on `e`; errors when no path is accepted.
pub fn occupation_posteriors(g: &Fsa, e: &EmissionMatrix) -> Result<FrameMatrix> {
    Ok(forward_backward(g, e)?.occupation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Arc;

    fn arc(src: u32, dst: u32, label: u32, weight: f64) -> Arc {
        Arc { src, dst, label, weight }
    }

    #[test]
    fn single_arc() {
        let g = Fsa::new(2, 0, vec![arc(0, 1, 1, 0.0)], vec![(1, 0.0)]).unwrap();
        let e = EmissionMatrix::from_rows(&[vec![(1.0 - (-0.5f64).exp()).ln(), -0.5]]).unwrap();
        assert!((forward_score(&g, &e).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_parallel_arcs() {
        let g = Fsa::new(
            2,
            0,
            vec![arc(0, 1, 0, 0.0), arc(0, 1, 1, 0.0)],
            vec![(1, 0.0)],
        )
        .unwrap();
        let m = FrameMatrix::from_rows(&[vec![-1.0, -2.0]]).unwrap();
        let e = EmissionMatrix::new_unchecked_normalization(m).unwrap();
        let s = forward_score(&g, &e).unwrap();
        assert!((s - (-0.686_738_4)).abs() < 1e-6, "{s}");
    }

    #[test]
    fn label_out_of_range() {
        let g = Fsa::new(2, 0, vec![arc(0, 1, 5, 0.0)], vec![(1, 0.0)]).unwrap();
        let e = EmissionMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            forward_score(&g, &e),
            Err(Error::LabelOutOfRange { label: 5, .. })
        ));
    }

    #[test]
    fn unreachable_final_in_one_frame() {
        let g = Fsa::new(
            3,
            0,
            vec![arc(0, 1, 0, 0.0), arc(1, 2, 0, 0.0)],
            vec![(2, 0.0)],
        )
        .unwrap();
        let e = EmissionMatrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        let series = forward_prefix_series(&g, &e).unwrap();
        assert_eq!(series[0], f64::NEG_INFINITY);
        assert_eq!(series[1], 0.0);
        assert!(matches!(
            forward_backward(&g, &e.truncated(1)),
            Err(Error::NoPath { frames: 1 })
        ));
    }

    #[test]
    fn single_path_is_one_hot() {
        let g = Fsa::new(
            3,
            0,
            vec![arc(0, 1, 1, 0.0), arc(1, 2, 0, 0.0)],
            vec![(2, 0.0)],
        )
        .unwrap();
        let e = EmissionMatrix::from_logits(&[vec![0.3, 0.1], vec![-0.2, 0.4]]).unwrap();
        let occ = occupation_posteriors(&g, &e).unwrap();
        assert_eq!(occ.row(0), &[0.0, 1.0]);
        assert_eq!(occ.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn symmetric_branch_splits_evenly() {
        let g = Fsa::new(
            2,
            0,
            vec![arc(0, 1, 1, 0.0), arc(0, 1, 2, 0.0)],
            vec![(1, 0.0)],
        )
        .unwrap();
        let e = EmissionMatrix::from_logits(&[vec![0.0, 1.0, 1.0]]).unwrap();
        let occ = occupation_posteriors(&g, &e).unwrap();
        assert!((occ.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((occ.get(0, 2) - 0.5).abs() < 1e-15);
    }
}
