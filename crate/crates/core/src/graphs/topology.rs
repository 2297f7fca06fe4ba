//! CTC topology and expansion of phone-level acceptors into frame-level graphs.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::graphs::fsa::{Arc, Fsa, StateId};
use crate::graphs::lexicon::{PhoneId, BLANK};
use crate::semiring::log_add;

/// CTC topology over `num_units` units (blank plus phones).
///
/// State 0 is "after blank or nothing"; state `p` is "inside phone `p`".
/// Every state is final with weight 0, and so is every arc. As an acceptor
/// the topology accepts every label sequence; its structure encodes where a
/// new phone occurrence begins: a non-blank arc between two different
/// states starts a new phone, a self-loop repeats it.
pub fn build_ctc_topology(num_units: usize) -> Result<Fsa> {
    if num_units < 2 {
        return Err(Error::TooFewPhones(num_units));
    }
    let n = num_units as u32;
    let mut arcs = Vec::with_capacity(num_units * num_units);
    for src in 0..n {
        for label in 0..n {
            let dst = if label == BLANK { 0 } else { label };
            arcs.push(Arc {
                src,
                dst,
                label,
                weight: 0.0,
            });
        }
    }
    let finals = (0..n).map(|s| (s, 0.0)).collect();
    Fsa::new(n, 0, arcs, finals)
}

/// Repeat-removal followed by blank-removal.
pub fn ctc_collapse(labels: &[u32]) -> Vec<PhoneId> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in labels {
        if Some(l) != prev && l != BLANK {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct PhoneArc {
    src: usize,
    dst: usize,
    /// `None` is epsilon.
    label: Option<PhoneId>,
    weight: f64,
}

/// Phone-level acceptor that may carry epsilon arcs. Only used while
/// compiling; the frame-level result is always epsilon-free.
#[derive(Clone, Debug, Default)]
pub(crate) struct PhoneGraph {
    arcs: Vec<PhoneArc>,
    finals: Vec<f64>,
    start: usize,
}

impl PhoneGraph {
    pub(crate) fn add_state(&mut self) -> usize {
        self.finals.push(f64::NEG_INFINITY);
        self.finals.len() - 1
    }

    pub(crate) fn set_start(&mut self, s: usize) {
        self.start = s;
    }

    pub(crate) fn set_final(&mut self, s: usize, weight: f64) {
        self.finals[s] = weight;
    }

    pub(crate) fn add_arc(&mut self, src: usize, dst: usize, label: Option<PhoneId>, weight: f64) {
        self.arcs.push(PhoneArc {
            src,
            dst,
            label,
            weight,
        });
    }

    fn num_states(&self) -> usize {
        self.finals.len()
    }

    /// Epsilon removal in the log semiring. Epsilon arcs must be acyclic.
    pub(crate) fn remove_epsilons(&self) -> Result<PhoneGraph> {
        let n = self.num_states();
        let mut eps_out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut real_out: Vec<Vec<PhoneArc>> = vec![Vec::new(); n];
        for a in &self.arcs {
            match a.label {
                None => eps_out[a.src].push((a.dst, a.weight)),
                Some(_) => real_out[a.src].push(*a),
            }
        }
        let mut closures: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
        let mut on_stack = vec![false; n];
        for s in 0..n {
            closure(s, &eps_out, &mut closures, &mut on_stack)?;
        }

        let mut out = PhoneGraph {
            arcs: Vec::new(),
            finals: vec![f64::NEG_INFINITY; n],
            start: self.start,
        };
        for (s, reach) in closures.iter().enumerate() {
            for &(r, w) in reach.as_ref().expect("computed") {
                out.finals[s] = log_add(out.finals[s], w + self.finals[r]);
                for a in &real_out[r] {
                    out.arcs.push(PhoneArc {
                        src: s,
                        dst: a.dst,
                        label: a.label,
                        weight: w + a.weight,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Composes this epsilon-free phone acceptor with a CTC topology and
    /// returns the trimmed, frame-level acceptor. States are numbered in
    /// breadth-first discovery order, so the result is deterministic.
    pub(crate) fn expand_ctc(&self, topo: &Fsa) -> Result<Fsa> {
        if self.arcs.iter().any(|a| a.label.is_none()) {
            return Err(Error::InvalidGraph(
                "phone graph still has epsilon arcs".into(),
            ));
        }
        let mut topo_out: Vec<Vec<Arc>> = vec![Vec::new(); topo.num_states()];
        for a in topo.arcs() {
            topo_out[a.src as usize].push(*a);
        }
        let topo_final = topo.final_weights();
        let mut phone_out: Vec<Vec<PhoneArc>> = vec![Vec::new(); self.num_states()];
        for a in &self.arcs {
            if a.weight != f64::NEG_INFINITY {
                phone_out[a.src].push(*a);
            }
        }

        let mut ids: HashMap<(usize, StateId), u32> = HashMap::new();
        let mut order: Vec<(usize, StateId)> = Vec::new();
        let mut queue = VecDeque::new();
        let mut arcs = Vec::new();
        let intern = |key: (usize, StateId),
                      ids: &mut HashMap<(usize, StateId), u32>,
                      order: &mut Vec<(usize, StateId)>,
                      queue: &mut VecDeque<(usize, StateId)>| {
            *ids.entry(key).or_insert_with(|| {
                order.push(key);
                queue.push_back(key);
                (order.len() - 1) as u32
            })
        };
        intern((self.start, topo.start()), &mut ids, &mut order, &mut queue);
        while let Some((q, s)) = queue.pop_front() {
            let src = ids[&(q, s)];
            for t in &topo_out[s as usize] {
                let starts_phone = t.label != BLANK && t.src != t.dst;
                if starts_phone {
                    for pa in phone_out[q].iter().filter(|pa| pa.label == Some(t.label)) {
                        let dst = intern((pa.dst, t.dst), &mut ids, &mut order, &mut queue);
                        arcs.push(Arc {
                            src,
                            dst,
                            label: t.label,
                            weight: pa.weight + t.weight,
                        });
                    }
                } else {
                    let dst = intern((q, t.dst), &mut ids, &mut order, &mut queue);
                    arcs.push(Arc {
                        src,
                        dst,
                        label: t.label,
                        weight: t.weight,
                    });
                }
            }
        }
        let finals: Vec<f64> = order
            .iter()
            .map(|&(q, s)| self.finals[q] + topo_final[s as usize])
            .collect();
        trim(order.len(), arcs, finals)
    }
}

fn closure(
    s: usize,
    eps_out: &[Vec<(usize, f64)>],
    memo: &mut Vec<Option<Vec<(usize, f64)>>>,
    on_stack: &mut Vec<bool>,
) -> Result<()> {
    if memo[s].is_some() {
        return Ok(());
    }
    if on_stack[s] {
        return Err(Error::InvalidGraph("epsilon cycle in phone graph".into()));
    }
    on_stack[s] = true;
    // Ordered by first reach so the expanded arc order is reproducible.
    let mut acc: Vec<(usize, f64)> = vec![(s, 0.0)];
    for &(r, w) in &eps_out[s] {
        closure(r, eps_out, memo, on_stack)?;
        for &(x, wx) in memo[r].as_ref().expect("computed") {
            match acc.iter_mut().find(|(y, _)| *y == x) {
                Some(slot) => slot.1 = log_add(slot.1, w + wx),
                None => acc.push((x, w + wx)),
            }
        }
    }
    on_stack[s] = false;
    memo[s] = Some(acc);
    Ok(())
}

/// Drops states that cannot reach a final state (start is state 0 and is
/// always kept) and renumbers the rest preserving order.
fn trim(num_states: usize, arcs: Vec<Arc>, finals: Vec<f64>) -> Result<Fsa> {
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); num_states];
    for a in &arcs {
        if a.weight != f64::NEG_INFINITY {
            rev[a.dst as usize].push(a.src as usize);
        }
    }
    let mut alive = vec![false; num_states];
    let mut queue: VecDeque<usize> = (0..num_states)
        .filter(|&s| finals[s] != f64::NEG_INFINITY)
        .collect();
    for &s in &queue {
        alive[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &p in &rev[s] {
            if !alive[p] {
                alive[p] = true;
                queue.push_back(p);
            }
        }
    }
    if !alive[0] {
        return Err(Error::InvalidGraph(
            "no final state is reachable from the start state".into(),
        ));
    }
    let mut remap = vec![u32::MAX; num_states];
    let mut next = 0u32;
    for s in 0..num_states {
        if alive[s] {
            remap[s] = next;
            next += 1;
        }
    }
    let arcs = arcs
        .into_iter()
        .filter(|a| {
            a.weight != f64::NEG_INFINITY && alive[a.src as usize] && alive[a.dst as usize]
        })
        .map(|a| Arc {
            src: remap[a.src as usize],
            dst: remap[a.dst as usize],
            ..a
        })
        .collect();
    let finals = (0..num_states)
        .filter(|&s| alive[s] && finals[s] != f64::NEG_INFINITY)
        .map(|s| (remap[s], finals[s]))
        .collect();
    Fsa::new(next, 0, arcs, finals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_examples() {
        assert_eq!(ctc_collapse(&[0, 1, 1, 0]), vec![1]);
        assert_eq!(ctc_collapse(&[1, 0, 1]), vec![1, 1]);
        assert_eq!(ctc_collapse(&[0, 0]), Vec::<u32>::new());
        assert_eq!(ctc_collapse(&[2, 1, 1, 2]), vec![2, 1, 2]);
    }

    #[test]
    fn topology_requires_two_units() {
        assert!(matches!(build_ctc_topology(1), Err(Error::TooFewPhones(1))));
        let topo = build_ctc_topology(2).unwrap();
        assert_eq!(topo.num_states(), 2);
        assert_eq!(topo.arcs().len(), 4);
        assert!(topo.arcs().iter().all(|a| a.weight == 0.0));
    }

    #[test]
    fn epsilon_cycle_is_rejected() {
        let mut g = PhoneGraph::default();
        let a = g.add_state();
        let b = g.add_state();
        g.add_arc(a, b, None, 0.0);
        g.add_arc(b, a, None, 0.0);
        g.set_final(b, 0.0);
        assert!(g.remove_epsilons().is_err());
    }

    #[test]
    fn epsilon_removal_sums_parallel_paths() {
        // a -eps(w1)-> b, a -eps(w2)-> c -eps(0)-> b ; b final
        let mut g = PhoneGraph::default();
        let a = g.add_state();
        let b = g.add_state();
        let c = g.add_state();
        g.add_arc(a, b, None, (0.25f64).ln());
        g.add_arc(a, c, None, (0.5f64).ln());
        g.add_arc(c, b, None, 0.0);
        g.set_final(b, 0.0);
        let e = g.remove_epsilons().unwrap();
        assert!((e.finals[a] - 0.75f64.ln()).abs() < 1e-15);
    }
}
