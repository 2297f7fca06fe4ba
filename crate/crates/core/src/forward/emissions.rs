use std::io::Write;

use crate::error::{Error, Result};
use crate::graphs::ByteCursor;
use crate::semiring::log_sum_exp;

/// Dense row-major `frames x units` matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrix {
    frames: usize,
    units: usize,
    values: Vec<f64>,
}

impl FrameMatrix {
    pub fn new(frames: usize, units: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * units {
            return Err(Error::InvalidEmissions(format!(
                "expected {} values for {frames}x{units}, got {}",
                frames * units,
                values.len()
            )));
        }
        Ok(Self {
            frames,
            units,
            values,
        })
    }

    pub fn zeros(frames: usize, units: usize) -> Self {
        Self {
            frames,
            units,
            values: vec![0.0; frames * units],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let units = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != units) {
            return Err(Error::InvalidEmissions("ragged rows".into()));
        }
        Self::new(rows.len(), units, rows.concat())
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_units(&self) -> usize {
        self.units
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.units..(t + 1) * self.units]
    }

    pub fn get(&self, t: usize, p: usize) -> f64 {
        self.values[t * self.units + p]
    }

    pub fn set(&mut self, t: usize, p: usize, v: f64) {
        self.values[t * self.units + p] = v;
    }

    pub fn add_at(&mut self, t: usize, p: usize, v: f64) {
        self.values[t * self.units + p] += v;
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &FrameMatrix) -> Result<FrameMatrix> {
        if self.frames != other.frames || self.units != other.units {
            return Err(Error::InvalidEmissions("shape mismatch".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        FrameMatrix::new(self.frames, self.units, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FrameMatrix {
        FrameMatrix {
            frames: self.frames,
            units: self.units,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-frame log-posteriors over phone units.
///
/// Entries are finite or `-inf`. Unless built with
/// [`EmissionMatrix::new_unchecked_normalization`], every frame's
/// log-sum-exp is 0 within [`NORMALIZATION_TOLERANCE`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionMatrix {
    matrix: FrameMatrix,
}

pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;
const MAGIC: &[u8; 4] = b"LEMI";
pub const EMISSION_FORMAT_VERSION: u32 = 1;

impl EmissionMatrix {
    pub fn new(matrix: FrameMatrix) -> Result<Self> {
        let e = Self::new_unchecked_normalization(matrix)?;
        for t in 0..e.num_frames() {
            let z = log_sum_exp(e.row(t).iter().copied());
            if (z - 0.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::InvalidEmissions(format!(
                    "frame {t} log-sum-exp is {z}, expected 0"
                )));
            }
        }
        Ok(e)
    }

    /// Validates values (no NaN, no `+inf`) but not per-frame normalization.
    pub fn new_unchecked_normalization(matrix: FrameMatrix) -> Result<Self> {
        if let Some(v) = matrix
            .values()
            .iter()
            .find(|v| v.is_nan() || **v == f64::INFINITY)
        {
            return Err(Error::InvalidEmissions(format!("invalid entry {v}")));
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(FrameMatrix::from_rows(rows)?)
    }

    /// Builds normalized log-posteriors by log-softmax over each row of `logits`.
    pub fn from_logits(rows: &[Vec<f64>]) -> Result<Self> {
        let normalized: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let z = log_sum_exp(r.iter().copied());
                r.iter().map(|v| v - z).collect()
            })
            .collect();
        Self::from_rows(&normalized)
    }

    pub fn num_frames(&self) -> usize {
        self.matrix.num_frames()
    }

    pub fn num_units(&self) -> usize {
        self.matrix.num_units()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.matrix.row(t)
    }

    pub fn get(&self, t: usize, p: usize) -> f64 {
        self.matrix.get(t, p)
    }

    pub fn matrix(&self) -> &FrameMatrix {
        &self.matrix
    }

    /// First `frames` frames.
    pub fn truncated(&self, frames: usize) -> EmissionMatrix {
        let frames = frames.min(self.num_frames());
        let units = self.num_units();
        EmissionMatrix {
            matrix: FrameMatrix {
                frames,
                units,
                values: self.matrix.values[..frames * units].to_vec(),
            },
        }
    }

    /// Multiplies every entry by `scale`; a zero scale yields all zeros
    /// (emissions ignored) rather than `0 * -inf`.
    pub fn scaled(&self, scale: f64) -> Result<EmissionMatrix> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "acoustic scale must be finite and non-negative, got {scale}"
            )));
        }
        if scale == 1.0 {
            return Ok(self.clone());
        }
        Ok(EmissionMatrix {
            matrix: self
                .matrix
                .map(|v| if scale == 0.0 { 0.0 } else { v * scale }),
        })
    }
}

/// Writes the `LEMI` binary form (values stored as `f32`).
pub fn write_lemi<W: Write>(m: &FrameMatrix, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&EMISSION_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(m.num_frames() as u32).to_le_bytes())?;
    w.write_all(&(m.num_units() as u32).to_le_bytes())?;
    for &v in m.values() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn lemi_bytes(m: &FrameMatrix) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_lemi(m, &mut buf)?;
    Ok(buf)
}

/// Reads the `LEMI` binary form, upcasting values to `f64`.
pub fn read_lemi(bytes: &[u8]) -> Result<FrameMatrix> {
    let mut cur = ByteCursor::new(bytes);
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("missing LEMI magic".into()));
    }
    let version = cur.u32()?;
    if version != EMISSION_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "LEMI",
            found: version,
            expected: EMISSION_FORMAT_VERSION,
        });
    }
    let frames = cur.u32()? as usize;
    let units = cur.u32()? as usize;
    if cur.remaining() != frames * units * 4 {
        return Err(Error::Format(format!(
            "LEMI payload is {} bytes, expected {}",
            cur.remaining(),
            frames * units * 4
        )));
    }
    let values = (0..frames * units)
        .map(|_| cur.f32().map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    FrameMatrix::new(frames, units, values)
}

impl EmissionMatrix {
    /// Loads `LEMI` bytes; `check_normalization = false` skips the per-frame check.
    pub fn from_lemi(bytes: &[u8], check_normalization: bool) -> Result<Self> {
        let m = read_lemi(bytes)?;
        if check_normalization {
            Self::new(m)
        } else {
            Self::new_unchecked_normalization(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_unnormalized() {
        assert!(EmissionMatrix::from_rows(&[vec![f64::NAN, 0.0]]).is_err());
        assert!(EmissionMatrix::from_rows(&[vec![-1.0, -1.0]]).is_err());
        let m = FrameMatrix::from_rows(&[vec![-1.0, -1.0]]).unwrap();
        assert!(EmissionMatrix::new_unchecked_normalization(m).is_ok());
        assert!(EmissionMatrix::from_rows(&[vec![0.0, f64::NEG_INFINITY]]).is_ok());
    }

    #[test]
    fn lemi_round_trip() {
        let e = EmissionMatrix::from_logits(&[vec![0.1, 2.0, -1.0], vec![3.0, 0.0, 0.5]]).unwrap();
        let bytes = lemi_bytes(e.matrix()).unwrap();
        let back = EmissionMatrix::from_lemi(&bytes, true).unwrap();
        assert_eq!(back.num_frames(), 2);
        for t in 0..2 {
            for p in 0..3 {
                assert!((back.get(t, p) - e.get(t, p)).abs() < 1e-6);
            }
        }
        assert_eq!(lemi_bytes(back.matrix()).unwrap(), bytes);
    }

    #[test]
    fn lemi_rejects_bad_version_and_length() {
        let e = EmissionMatrix::from_rows(&[vec![0.0]]).unwrap();
        let mut bytes = lemi_bytes(e.matrix()).unwrap();
        bytes.push(0);
        assert!(read_lemi(&bytes).is_err());
        bytes.pop();
        bytes[4] = 2;
        assert!(matches!(
            read_lemi(&bytes),
            Err(Error::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn zero_scale_ignores_neg_inf() {
        let e = EmissionMatrix::from_rows(&[vec![0.0, f64::NEG_INFINITY]]).unwrap();
        let z = e.scaled(0.0).unwrap();
        assert_eq!(z.row(0), &[0.0, 0.0]);
        assert!(e.scaled(-1.0).is_err());
    }
}
