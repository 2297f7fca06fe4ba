//! Log-semiring arithmetic on `f64`.
//!
//! Negative infinity is the additive identity: `log_add(-inf, x) == x` and
//! no operation here ever produces NaN from non-NaN inputs.

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp over an iterator. Empty input gives `-inf`.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = iter.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// First-order difference of two log scores that keeps `-inf` absorbing.
///
/// If either side is `-inf` the result is `-inf`: a hypothesis that became
/// infeasible stays infeasible instead of turning into NaN.
#[inline]
pub fn log_delta(new: f64, old: f64) -> f64 {
    if new == f64::NEG_INFINITY || old == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        new - old
    }
}

/// `weight * value` with `0 * -inf` defined as 0 (a disabled term contributes nothing).
#[inline]
pub fn weighted(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}
