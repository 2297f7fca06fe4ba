//! Independent oracles shared by the integration tests: exhaustive path
//! enumeration, finite differences, and brute-force decoders.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lfmmi::alignment_score::AlignmentScorer;
use lfmmi::decoders::{AedScoreProvider, NtScoreProvider};
use lfmmi::forward::{EmissionMatrix, FrameMatrix};
use lfmmi::graphs::{Arc, Fsa, TokenId};
use lfmmi::prefix_score::MmiScorer;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn lse(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn random_logits(rng: &mut StdRng, frames: usize, units: usize) -> Vec<Vec<f64>> {
    (0..frames)
        .map(|_| (0..units).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect()
}

pub fn random_emissions(rng: &mut StdRng, frames: usize, units: usize) -> EmissionMatrix {
    EmissionMatrix::from_logits(&random_logits(rng, frames, units)).unwrap()
}

/// Random valid FSA with at most `max_states` states and labels below `units`.
pub fn random_fsa(rng: &mut StdRng, max_states: u32, units: u32) -> Fsa {
    loop {
        let n = rng.gen_range(1..=max_states);
        let num_arcs = rng.gen_range(1..=2 * n as usize + 2);
        let arcs = (0..num_arcs)
            .map(|_| Arc {
                src: rng.gen_range(0..n),
                dst: rng.gen_range(0..n),
                label: rng.gen_range(0..units),
                weight: if rng.gen_bool(0.1) {
                    f64::NEG_INFINITY
                } else {
                    rng.gen_range(-2.0..0.0)
                },
            })
            .collect();
        let mut finals = Vec::new();
        for s in 0..n {
            if rng.gen_bool(0.5) {
                finals.push((s, rng.gen_range(-1.0..0.0)));
            }
        }
        if let Ok(g) = Fsa::new(n, rng.gen_range(0..n), arcs, finals) {
            return g;
        }
    }
}

/// Log of the summed weight of every state path through `g` that reads
/// `labels` and ends in a final state; no emissions.
pub fn label_path_weight(g: &Fsa, labels: &[u32]) -> f64 {
    fn walk(g: &Fsa, state: u32, labels: &[u32], acc: f64, out: &mut Vec<f64>) {
        match labels.split_first() {
            None => {
                if let Some(&(_, w)) = g.finals().iter().find(|(s, _)| *s == state) {
                    out.push(acc + w);
                }
            }
            Some((&l, rest)) => {
                for a in g.arcs().iter().filter(|a| a.src == state && a.label == l) {
                    walk(g, a.dst, rest, acc + a.weight, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(g, g.start(), labels, 0.0, &mut out);
    lse(&out)
}

pub fn all_label_paths(frames: usize, units: u32) -> Vec<Vec<u32>> {
    let mut paths = vec![Vec::new()];
    for _ in 0..frames {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..units).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    paths
}

pub fn accepted_label_paths(g: &Fsa, frames: usize, units: u32) -> BTreeSet<Vec<u32>> {
    all_label_paths(frames, units)
        .into_iter()
        .filter(|p| label_path_weight(g, p) > f64::NEG_INFINITY)
        .collect()
}

/// `log P(O_1^frames | G)` by enumerating all label sequences.
pub fn enumerate_forward(g: &Fsa, e: &EmissionMatrix, frames: usize) -> f64 {
    let terms: Vec<f64> = all_label_paths(frames, e.num_units() as u32)
        .into_iter()
        .map(|p| {
            let w = label_path_weight(g, &p);
            let em: f64 = p.iter().enumerate().map(|(t, &l)| e.get(t, l as usize)).sum();
            w + em
        })
        .collect();
    lse(&terms)
}

/// Remove repeats, then blanks (unit 0).
pub fn collapse(labels: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in labels {
        if Some(l) != prev && l != 0 {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

/// Central finite-difference gradient of `f` with respect to every entry.
pub fn finite_difference(m: &FrameMatrix, h: f64, f: impl Fn(&EmissionMatrix) -> f64) -> FrameMatrix {
    let mut grad = FrameMatrix::zeros(m.num_frames(), m.num_units());
    for t in 0..m.num_frames() {
        for p in 0..m.num_units() {
            let mut plus = m.clone();
            plus.add_at(t, p, h);
            let mut minus = m.clone();
            minus.add_at(t, p, -h);
            let fp = f(&EmissionMatrix::new_unchecked_normalization(plus).unwrap());
            let fm = f(&EmissionMatrix::new_unchecked_normalization(minus).unwrap());
            grad.set(t, p, (fp - fm) / (2.0 * h));
        }
    }
    grad
}

/// `max |a - b| / max(max |a|, max |b|)`, the usual gradient-check measure.
pub fn relative_error(a: &FrameMatrix, b: &FrameMatrix) -> f64 {
    let diff = a.sub(b).unwrap().max_abs();
    let scale = a.max_abs().max(b.max_abs());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn all_sequences(vocab: usize, max_len: usize) -> Vec<Vec<TokenId>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        frontier = frontier
            .into_iter()
            .flat_map(|p: Vec<TokenId>| {
                (0..vocab as u32).map(move |k| {
                    let mut q = p.clone();
                    q.push(TokenId(k));
                    q
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn mmi_diff(new: f64, old: f64) -> f64 {
    if new == f64::NEG_INFINITY || old == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        new - old
    }
}

fn term(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}

/// Score of every complete hypothesis of length `<= max_len` under
/// label-synchronous scoring, computed sequence by sequence.
pub fn aed_brute_force(
    providers: &[(&dyn AedScoreProvider, f64)],
    mmi: Option<(&MmiScorer<'_>, f64)>,
    vocab: usize,
    max_len: usize,
) -> Vec<(Vec<TokenId>, f64)> {
    let mut out = Vec::new();
    for seq in all_sequences(vocab, max_len) {
        let mut total = 0.0;
        for u in 0..=seq.len() {
            let prefix = &seq[..u];
            for (p, w) in providers {
                let s = p.next_token_scores(prefix).unwrap();
                let v = if u < seq.len() { s.tokens[seq[u].index()] } else { s.eos };
                total += term(*w, v);
            }
        }
        if let Some((scorer, w)) = mmi {
            let score = |k: usize| scorer.entry(&seq[..k]).unwrap().prefix_score();
            for u in 1..=seq.len() {
                total += term(w, mmi_diff(score(u), score(u - 1)));
            }
            let full = scorer.entry(&seq).unwrap();
            let end = mmi_diff(scorer.log_ratio(&full, scorer.num_frames()).unwrap(), full.prefix_score());
            total += term(w, end);
        }
        if total > f64::NEG_INFINITY {
            out.push((seq, total));
        }
    }
    out
}

/// Sum over every alignment path (blank advances a frame, tokens keep it,
/// at most `u_max` tokens, complete once all frames are consumed) of the
/// transducer probability, plus the MMI alignment-score increments along
/// the path, grouped by token sequence.
pub fn nt_brute_force(
    provider: &dyn NtScoreProvider,
    mmi: Option<(&AlignmentScorer<'_, '_>, f64)>,
    vocab: usize,
    u_max: usize,
) -> BTreeMap<Vec<u32>, f64> {
    let frames = provider.num_frames();
    let ali = |tokens: &[TokenId], t: usize| -> f64 {
        let (a, _) = mmi.unwrap();
        let entry = a.scorer().entry(tokens).unwrap();
        a.score(&entry, t).unwrap()
    };
    // (tokens, frame, nt score, mmi score)
    let mut stack = vec![(Vec::<TokenId>::new(), 0usize, 0.0f64, 0.0f64)];
    let mut paths: BTreeMap<Vec<u32>, Vec<(f64, f64)>> = BTreeMap::new();
    while let Some((tokens, t, nt, m)) = stack.pop() {
        let s = provider.frame_scores(&tokens, t).unwrap();
        let blank_mmi = match mmi {
            Some((_, w)) => term(w, mmi_diff(ali(&tokens, t + 1), ali(&tokens, t))),
            None => 0.0,
        };
        let (nt_b, m_b) = (nt + s.blank, m + blank_mmi);
        if nt_b + m_b > f64::NEG_INFINITY {
            if t + 1 == frames {
                paths
                    .entry(tokens.iter().map(|k| k.0).collect())
                    .or_default()
                    .push((nt_b, m_b));
            } else {
                stack.push((tokens.clone(), t + 1, nt_b, m_b));
            }
        }
        if tokens.len() < u_max {
            for k in 0..vocab as u32 {
                let mut child = tokens.clone();
                child.push(TokenId(k));
                let tok_mmi = match mmi {
                    Some((_, w)) => term(w, mmi_diff(ali(&child, t), ali(&tokens, t))),
                    None => 0.0,
                };
                let (nt_k, m_k) = (nt + s.tokens[k as usize], m + tok_mmi);
                if nt_k + m_k > f64::NEG_INFINITY {
                    stack.push((child, t, nt_k, m_k));
                }
            }
        }
    }
    paths
        .into_iter()
        .map(|(seq, ps)| {
            let nt = lse(&ps.iter().map(|p| p.0).collect::<Vec<_>>());
            (seq, nt + ps[0].1)
        })
        .collect()
}
