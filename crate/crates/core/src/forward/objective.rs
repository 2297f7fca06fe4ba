use crate::error::{Error, Result};
use crate::forward::emissions::{EmissionMatrix, FrameMatrix};
use crate::forward::pass::forward_backward;
use crate::graphs::Fsa;

#[derive(Clone, Debug)]
pub struct LfMmiOutput {
    /// `log P(O|G_num) - log P(O|G_den)`.
    pub objective: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// `d objective / d emissions`: numerator minus denominator occupation.
    pub gradient: FrameMatrix,
}

/// LF-MMI objective and its gradient with respect to the emission matrix.
pub fn lfmmi_objective_and_grad(
    g_num: &Fsa,
    g_den: &Fsa,
    e: &EmissionMatrix,
) -> Result<LfMmiOutput> {
    let num = forward_backward(g_num, e).map_err(|err| match err {
        Error::NoPath { frames } => Error::NumeratorInfeasible { frames },
        other => other,
    })?;
    let den = forward_backward(g_den, e).map_err(|err| match err {
        Error::NoPath { frames } => Error::DenominatorInfeasible { frames },
        other => other,
    })?;
    Ok(LfMmiOutput {
        objective: num.log_likelihood - den.log_likelihood,
        numerator: num.log_likelihood,
        denominator: den.log_likelihood,
        gradient: num.occupation.sub(&den.occupation)?,
    })
}

/// Same as [`lfmmi_objective_and_grad`] on `acoustic_scale * e`, with the
/// gradient taken with respect to the unscaled emissions.
pub fn lfmmi_objective_and_grad_scaled(
    g_num: &Fsa,
    g_den: &Fsa,
    e: &EmissionMatrix,
    acoustic_scale: f64,
) -> Result<LfMmiOutput> {
    let scaled = e.scaled(acoustic_scale)?;
    let mut out = lfmmi_objective_and_grad(g_num, g_den, &scaled)?;
    if acoustic_scale != 1.0 {
        out.gradient = out.gradient.map(|g| g * acoustic_scale);
    }
    Ok(out)
}

pub const DEFAULT_ALPHA_AED: f64 = 0.3;
pub const DEFAULT_ALPHA_NT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Aed,
    Nt,
}

impl ModelKind {
    pub fn default_alpha(self) -> f64 {
        match self {
            ModelKind::Aed => DEFAULT_ALPHA_AED,
            ModelKind::Nt => DEFAULT_ALPHA_NT,
        }
    }
}

/// Externally computed criterion values. `ctc` is optional: its presence
/// selects the with-CTC variant of the interpolation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObjectiveParts {
    pub ce: Option<f64>,
    pub ctc: Option<f64>,
    pub lfmmi: Option<f64>,
    pub nt: Option<f64>,
}

/// Interpolated training objective.
///
/// * AED: `a*CE + (1-a)*CTC + (1-a)*LFMMI`, or `a*CE + (1-a)*LFMMI` without CTC.
/// * NT: `NT + a*CTC + a*LFMMI`, or `NT + a*LFMMI` without CTC.
pub fn combine_training_objectives(
    kind: ModelKind,
    alpha: f64,
    parts: &ObjectiveParts,
) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha {alpha} is not finite")));
    }
    let lfmmi = parts.lfmmi.ok_or(Error::MissingComponent("lfmmi"))?;
    match kind {
        ModelKind::Aed => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "AED interpolation weight must lie in (0, 1), got {alpha}"
                )));
            }
            let ce = parts.ce.ok_or(Error::MissingComponent("ce"))?;
            let rest = 1.0 - alpha;
            Ok(match parts.ctc {
                Some(ctc) => alpha * ce + rest * ctc + rest * lfmmi,
                None => alpha * ce + rest * lfmmi,
            })
        }
        ModelKind::Nt => {
            if alpha < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "NT interpolation weight must be non-negative, got {alpha}"
                )));
            }
            let nt = parts.nt.ok_or(Error::MissingComponent("nt"))?;
            Ok(match parts.ctc {
                Some(ctc) => nt + alpha * ctc + alpha * lfmmi,
                None => nt + alpha * lfmmi,
            })
        }
    }
}
