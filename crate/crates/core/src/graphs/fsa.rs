use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub type StateId = u32;

/// A single emitting arc. Every arc consumes exactly one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub src: StateId,
    pub dst: StateId,
    pub label: u32,
    pub weight: f64,
}

/// Epsilon-free weighted acceptor over phone units (blank is unit 0).
///
/// Final weights are kept as a state-sorted list of `(state, log-weight)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fsa {
    num_states: u32,
    start: StateId,
    arcs: Vec<Arc>,
    finals: Vec<(StateId, f64)>,
}

const MAGIC: &[u8; 4] = b"LFSA";
pub const FSA_FORMAT_VERSION: u32 = 1;

fn check_weight(w: f64, what: &str) -> Result<()> {
    if w.is_nan() || w == f64::INFINITY {
        return Err(Error::InvalidGraph(format!("{what} weight {w} is not a log-probability")));
    }
    Ok(())
}

impl Fsa {
    pub fn new(
        num_states: u32,
        start: StateId,
        arcs: Vec<Arc>,
        mut finals: Vec<(StateId, f64)>,
    ) -> Result<Self> {
        if start >= num_states {
            return Err(Error::InvalidGraph(format!(
                "start state {start} >= num_states {num_states}"
            )));
        }
        for a in &arcs {
            if a.src >= num_states || a.dst >= num_states {
                return Err(Error::InvalidGraph(format!(
                    "arc {}->{} references a state >= {num_states}",
                    a.src, a.dst
                )));
            }
            check_weight(a.weight, "arc")?;
        }
        finals.sort_by_key(|&(s, _)| s);
        for pair in finals.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidGraph(format!(
                    "state {} has two final weights",
                    pair[0].0
                )));
            }
        }
        for &(s, w) in &finals {
            if s >= num_states {
                return Err(Error::InvalidGraph(format!("final state {s} >= {num_states}")));
            }
            check_weight(w, "final")?;
        }
        let fsa = Self {
            num_states,
            start,
            arcs,
            finals,
        };
        if !fsa.final_reachable() {
            return Err(Error::InvalidGraph(
                "no final state is reachable from the start state".into(),
            ));
        }
        Ok(fsa)
    }

    pub fn num_states(&self) -> usize {
        self.num_states as usize
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn finals(&self) -> &[(StateId, f64)] {
        &self.finals
    }

    /// Dense final weights, `-inf` for non-final states.
    pub fn final_weights(&self) -> Vec<f64> {
        let mut dense = vec![f64::NEG_INFINITY; self.num_states()];
        for &(s, w) in &self.finals {
            dense[s as usize] = w;
        }
        dense
    }

    pub fn max_label(&self) -> Option<u32> {
        self.arcs.iter().map(|a| a.label).max()
    }

    fn final_reachable(&self) -> bool {
        let finals = self.final_weights();
        let mut seen = vec![false; self.num_states()];
        let mut out: Vec<Vec<StateId>> = vec![Vec::new(); self.num_states()];
        for a in &self.arcs {
            if a.weight != f64::NEG_INFINITY {
                out[a.src as usize].push(a.dst);
            }
        }
        let mut queue = VecDeque::from([self.start]);
        seen[self.start as usize] = true;
        while let Some(s) = queue.pop_front() {
            if finals[s as usize] != f64::NEG_INFINITY {
                return true;
            }
            for &d in &out[s as usize] {
                if !seen[d as usize] {
                    seen[d as usize] = true;
                    queue.push_back(d);
                }
            }
        }
        false
    }

    /// Writes the `LFSA` binary form. The format has no start-state field,
    /// so only graphs whose start state is 0 can be written.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.start != 0 {
            return Err(Error::Format(format!(
                "LFSA requires start state 0, graph starts at {}",
                self.start
            )));
        }
        w.write_all(MAGIC)?;
        w.write_all(&FSA_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.num_states.to_le_bytes())?;
        w.write_all(&(self.arcs.len() as u64).to_le_bytes())?;
        for a in &self.arcs {
            w.write_all(&a.src.to_le_bytes())?;
            w.write_all(&a.dst.to_le_bytes())?;
            w.write_all(&a.label.to_le_bytes())?;
            w.write_all(&a.weight.to_le_bytes())?;
        }
        for &(s, wt) in &self.finals {
            w.write_all(&s.to_le_bytes())?;
            w.write_all(&wt.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    /// Reads the `LFSA` binary form. Final-weight pairs run to end of input.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("missing LFSA magic".into()));
        }
        let version = cur.u32()?;
        if version != FSA_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: "LFSA",
                found: version,
                expected: FSA_FORMAT_VERSION,
            });
        }
        let num_states = cur.u32()?;
        let num_arcs = cur.u64()?;
        if num_arcs.saturating_mul(20) > cur.remaining() as u64 {
            return Err(Error::Format(format!("truncated arc table ({num_arcs} arcs)")));
        }
        let mut arcs = Vec::with_capacity(num_arcs as usize);
        for _ in 0..num_arcs {
            arcs.push(Arc {
                src: cur.u32()?,
                dst: cur.u32()?,
                label: cur.u32()?,
                weight: cur.f64()?,
            });
        }
        if !cur.remaining().is_multiple_of(12) {
            return Err(Error::Format("trailing bytes after final-weight table".into()));
        }
        let mut finals = Vec::with_capacity(cur.remaining() / 12);
        while cur.remaining() > 0 {
            finals.push((cur.u32()?, cur.f64()?));
        }
        Fsa::new(num_states, 0, arcs, finals)
    }
}

pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format("unexpected end of input".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Fsa {
        Fsa::new(
            2,
            0,
            vec![
                Arc { src: 0, dst: 1, label: 1, weight: -0.25 },
                Arc { src: 1, dst: 1, label: 0, weight: f64::NEG_INFINITY },
            ],
            vec![(1, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_states() {
        assert!(Fsa::new(1, 1, vec![], vec![(0, 0.0)]).is_err());
        let arc = Arc { src: 0, dst: 3, label: 0, weight: 0.0 };
        assert!(Fsa::new(2, 0, vec![arc], vec![(1, 0.0)]).is_err());
    }

    #[test]
    fn rejects_nan_and_unreachable_final() {
        let arc = Arc { src: 0, dst: 1, label: 0, weight: f64::NAN };
        assert!(Fsa::new(2, 0, vec![arc], vec![(1, 0.0)]).is_err());
        assert!(Fsa::new(2, 0, vec![], vec![(1, 0.0)]).is_err());
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let fsa = tiny();
        let bytes = fsa.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"LFSA");
        let back = Fsa::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.arcs()[1].weight, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_unknown_version() {
        let mut bytes = tiny().to_bytes().unwrap();
        bytes[4] = 9;
        assert!(matches!(
            Fsa::from_bytes(&bytes),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));
    }
}
