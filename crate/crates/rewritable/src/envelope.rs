//! Upper concave envelope of rate points.
//!
//! Intermediate write budgets are achievable by splitting cells between two
//! schemes (cost-sharing), so the achievable rate at a fractional budget is
//! the chord between the bracketing integer-budget points; taking the upper
//! concave envelope over all support points realizes the best split.

use crate::{Error, Result};

/// Piecewise-linear upper concave envelope of a set of `(x, y)` points.
#[derive(Debug, Clone)]
pub struct ConcaveEnvelope {
    hull: Vec<(f64, f64)>,
}

impl ConcaveEnvelope {
    /// Build from points sorted strictly increasing in `x`.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParams(
                "envelope needs at least one point".into(),
            ));
        }
        for pair in points.windows(2) {
            // NaN-rejecting: any non-ordered pair is an error.
            if pair[1].0.partial_cmp(&pair[0].0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidParams(format!(
                    "envelope points must be strictly increasing in x, got {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        // Monotone chain keeping only vertices of the upper hull: a point is
        // dropped when the chord around it does not bend downward.
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &p in points {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let slope_ab = (b.1 - a.1) / (b.0 - a.0);
                let slope_bp = (p.1 - b.1) / (p.0 - b.0);
                if slope_bp >= slope_ab {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(Self { hull })
    }

    /// Domain covered by the support points.
    pub fn domain(&self) -> (f64, f64) {
        (self.hull[0].0, self.hull[self.hull.len() - 1].0)
    }

    /// Hull vertices, ascending in `x`.
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.hull
    }

    /// Evaluate the envelope at `x`, clamping to the domain ends.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x <= lo {
            return self.hull[0].1;
        }
        if x >= hi {
            return self.hull[self.hull.len() - 1].1;
        }
        let idx = self
            .hull
            .partition_point(|&(px, _)| px <= x)
            .min(self.hull.len() - 1);
        let (x0, y0) = self.hull[idx - 1];
        let (x1, y1) = self.hull[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}
