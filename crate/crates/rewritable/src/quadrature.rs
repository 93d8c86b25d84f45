//! Gauss-Legendre quadrature with panel splitting at known breakpoints.
//!
//! Used as the independent numeric oracle for the closed-form write-cost
//! expressions: the integrands are piecewise-smooth rational functions, so
//! composite Gauss-Legendre inside each smooth panel converges fast.

use crate::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build an `n`-point rule. Nodes are the roots of the degree-`n`
    /// Legendre polynomial, found by Newton iteration from the Chebyshev
    /// initial guess; weights follow from the derivative.
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=1024).contains(&n) {
            return Err(Error::InvalidParams(format!(
                "quadrature order must be in [2, 1024], got {n}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-based initial guess for the i-th positive root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[lo, hi]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        half * acc
    }
}

/// Integrate `f` over `[breakpoints[0], breakpoints[last]]` splitting panels
/// exactly at the interior breakpoints, subdividing each panel so the total
/// node count is at least `min_points`.
///
/// Breakpoints must be finite and nondecreasing; zero-width panels are
/// skipped so callers can pass coincident boundaries.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    min_points: usize,
) -> Result<f64> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidParams(
            "need at least two breakpoints to integrate".into(),
        ));
    }
    for pair in breakpoints.windows(2) {
        if !pair[0].is_finite() || !pair[1].is_finite() || pair[1] < pair[0] {
            return Err(Error::InvalidParams(format!(
                "breakpoints must be finite and nondecreasing, got {pair:?}"
            )));
        }
    }
    let total = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    if total <= 0.0 {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(16)?;
    let mut acc = 0.0;
    for pair in breakpoints.windows(2) {
        let width = pair[1] - pair[0];
        if width <= 0.0 {
            continue;
        }
        let share = (min_points as f64 * width / total / rule.len() as f64).ceil();
        let chunks = share.max(1.0) as usize;
        let step = width / chunks as f64;
        for c in 0..chunks {
            let lo = pair[0] + c as f64 * step;
            acc += rule.integrate(&f, lo, lo + step);
        }
    }
    Ok(acc)
}
