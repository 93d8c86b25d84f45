//! Closed-form rate expressions for the uniform cell: capacity with free
//! rewrites of known cost, the loss of the stimulus-shifting code relative
//! to it, and the shrinking gap of the interior/exterior code.

use crate::c1::c1_rate;
use crate::channel::UniformChannelParams;
use crate::{binary_entropy, ceil_eps, floor_eps, Error, Result};

/// One point of a rate/cost curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCostPoint {
    /// Average write budget, writes per cell.
    pub kappa: f64,
    /// Achieved rate in bits per cell.
    pub rate_bits: f64,
    /// Name of the scheme or bound producing the point.
    pub scheme: String,
    /// Scheme parameters as key/value pairs.
    pub params: Vec<(String, f64)>,
}

/// Capacity per cell with average write budget `kappa` when the offset is
/// absent (`B = 0`): `log2((1+a) kappa / a)`.
///
/// Valid from the threshold `kappa_0 = ceil((1+a)/a) / ((1+a)/a)`, the
/// smallest budget at which an integer number of width-`a/kappa` targets
/// tiles the output range; below it the expression is not achievable and
/// the call errors with [`Error::BelowThreshold`].
pub fn fact1_capacity(a: f64, kappa: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "noise width a must be positive, got {a}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "write budget kappa must be positive, got {kappa}"
        )));
    }
    let ratio = (1.0 + a) / a;
    let kappa0 = ceil_eps(ratio) / ratio;
    if kappa < kappa0 - 1e-12 {
        return Err(Error::BelowThreshold { kappa, kappa0 });
    }
    Ok((ratio * kappa).log2())
}

/// Rate lost by the stimulus-shifting code relative to the no-offset
/// capacity at equal budget: `log2((1 + B/a) / (1 + B/(1+a)))`.
///
/// Defined when `(1+a+B)/(a+B)` is an integer, the regime where the code's
/// slots tile the output range exactly; otherwise the comparison is not
/// tight and the call rejects the parameters.
pub fn c1_loss_term(a: f64, b: f64) -> Result<f64> {
    let params = UniformChannelParams::new(a, b)?;
    let slots = (1.0 + a + b) / (a + b);
    if (slots - slots.round()).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "(1+a+B)/(a+B) = {slots} is not an integer; the loss term only \
             applies when the slot count is integral"
        )));
    }
    let loss = ((1.0 + b / a) / (1.0 + b / (1.0 + a))).log2();
    // Consistency: rate + loss must reproduce the no-offset capacity at the
    // same per-cell write count, for any integer kappa.
    if params.b > 0.0 {
        let kappa = 3u32;
        let lhs = c1_rate(a, b, kappa)?;
        let rhs = ((1.0 + a) / a * kappa as f64).log2() - loss;
        debug_assert!(
            (lhs - rhs).abs() < 1e-12,
            "loss term inconsistent: {lhs} vs {rhs}"
        );
    }
    Ok(loss)
}

/// Gap between the no-offset capacity and the interior/exterior code with
/// explicit (non-optimized) parameters `D = a/kappa`, `m = round(kappa B / 2a)`,
/// `p = (1+a-B)/(1+a)`, zero switching thresholds.
///
/// Shrinks like `log2(kappa)/kappa` as the budget grows; clamped at zero
/// since the explicit rate can exceed none of the capacity.
pub fn corollary_gap(a: f64, b: f64, kappa: f64) -> Result<f64> {
    let params = UniformChannelParams::new(a, b)?;
    if !kappa.is_finite() || kappa < 2.0 {
        return Err(Error::InvalidParams(format!(
            "write budget kappa must be at least 2, got {kappa}"
        )));
    }
    let d = a / kappa;
    if d >= a - b {
        return Err(Error::InvalidParams(format!(
            "budget {kappa} too small for the explicit width D = a/kappa = {d} \
             to fit inside (0, {})",
            a - b
        )));
    }
    let cap = fact1_capacity(a, kappa)?;
    let p = (1.0 + a - b) / (1.0 + a);
    let n_int = floor_eps((1.0 + a - b) * kappa / a);
    let rate = if params.b == 0.0 {
        // No exterior: the code is pure interior tiling.
        n_int.log2()
    } else {
        let m = (kappa * b / (2.0 * a)).round().max(1.0);
        binary_entropy(p) + p * n_int.log2() + (1.0 - p) * (2.0 * m).log2()
    };
    Ok((cap - rate).max(0.0))
}
