//! Coding schemes and capacity lower bounds for rewritable storage cells
//! with a hidden per-cell offset.
//!
//! A storage cell accepts a write stimulus `x` and settles at
//!
//! ```text
//! y = x + w + s
//! ```
//!
//! where `w` is fresh noise on every write attempt and `s` is an offset
//! (fabrication variability) that is unknown but fixed for the lifetime of
//! the cell. The controller can read after each write and rewrite until the
//! output lands in a chosen target region, so information is carried by the
//! region identity and the price is the average number of writes per cell,
//! the write budget `kappa`.
//!
//! The crate provides:
//!
//! * [`channel`] — the cell model (bounded-uniform and Gaussian noise),
//!   rewrite episodes, and adaptive write strategies.
//! * [`c1`] — a fixed-stimulus region code for the uniform cell whose
//!   per-attempt hit probability is exactly `1/kappa` for every offset.
//! * [`c2`] — an interior/exterior region code with a state-adaptive
//!   switching policy, its closed-form write costs, the optimal switching
//!   thresholds, and the rate/cost optimizer.
//! * [`awgn`] — estimate-then-code machinery for the Gaussian cell: MMSE
//!   offset estimation, effective-noise algebra, the staged lower bound,
//!   and the interleaved-comb superposition scheme.
//! * [`bounds`] — analytic anchors: the no-offset capacity, the loss of the
//!   fixed-stimulus code, and the asymptotic-optimality gap.
//! * [`harness`] — a seedable, worker-count-invariant Monte Carlo runner
//!   plus an independent quadrature oracle for the write-cost formulas.
//! * [`cli`] + the `rewritable` binary — curves, tables, simulation and
//!   validation as reproducible CSV artifacts.
//!
//! Everything stochastic takes an explicit RNG; identical seeds give
//! identical results regardless of worker count.

pub mod awgn;
pub mod bounds;
pub mod c1;
pub mod c2;
pub mod channel;
pub mod cli;
pub mod config;
pub mod envelope;
pub mod harness;
pub mod quadrature;

pub use channel::{
    rewrite_until, AwgnChannelParams, CellState, Channel, UniformChannelParams, WriteStrategy,
    WriteTrace, DEFAULT_MAX_WRITES,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameters violate a documented precondition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A rewrite episode hit the write cap, which signals a mis-specified
    /// target (for example a region unreachable for the realized offset).
    #[error("write limit of {max_writes} attempts exceeded")]
    MaxWritesExceeded { max_writes: u64 },
    /// An output value falls in discarded output space no region claims.
    #[error("output {y} falls outside the used output space")]
    OutOfSupport { y: f64 },
    /// No scheme parameters meet the requested write budget.
    #[error("no feasible scheme parameters for write budget {kappa}")]
    Infeasible { kappa: f64 },
    /// The capacity formula does not apply below its budget threshold.
    #[error("write budget {kappa} is below the threshold {kappa0} where the formula applies")]
    BelowThreshold { kappa: f64, kappa0: f64 },
    /// Root bracketing failed; indicates an implementation fault, not bad input.
    #[error("no sign change found when bracketing a root")]
    NoRootBracket,
    /// A trial inside a Monte Carlo run failed.
    #[error("trial {index}: {source}")]
    TrialFailed {
        index: u64,
        #[source]
        source: Box<Error>,
    },
    /// Config file problem with position information.
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Binary entropy in bits, with `h(0) = h(1) = 0` by continuity.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Floor that forgives an argument sitting a hair below an integer.
///
/// Region counts come from expressions like `(1 + a + B)/(a + B)` whose
/// float value can land at `n - 1e-16` when the exact value is `n`; plain
/// `floor` would then lose a region.
pub(crate) fn floor_eps(x: f64) -> f64 {
    (x + 1e-9).floor()
}

/// Ceiling that forgives an argument sitting a hair above an integer.
pub(crate) fn ceil_eps(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Render a value with six significant digits for CSV output: plain decimal
/// in the comfortable magnitude range, scientific outside it, trailing
/// zeros trimmed. Deterministic formatting keeps reports byte-comparable.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs();
    if (1e-4..1e15).contains(&magnitude) {
        let leading = magnitude.log10().floor() as i32;
        if leading > 5 {
            let scale = 10f64.powi(leading - 5);
            return format!("{:.0}", (x / scale).round() * scale);
        }
        let decimals = (5 - leading).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((mantissa, exp)) => {
                let mantissa = if mantissa.contains('.') {
                    mantissa.trim_end_matches('0').trim_end_matches('.')
                } else {
                    mantissa
                };
                format!("{mantissa}e{exp}")
            }
            None => s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_endpoints_and_symmetry() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.3) - binary_entropy(0.7)).abs() < 1e-15);
    }

    #[test]
    fn guarded_rounding_handles_float_dust() {
        // (1 + 1/3)/(1/3) computes to 4.000000000000001 in f64.
        let ratio = (1.0 + 1.0 / 3.0) / (1.0 / 3.0);
        assert_eq!(ceil_eps(ratio), 4.0);
        assert_eq!(floor_eps(ratio), 4.0);
        assert_eq!(floor_eps(3.9999999999), 4.0);
        assert_eq!(floor_eps(3.9), 3.0);
        assert_eq!(ceil_eps(4.1), 5.0);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(3.9068905956085187), "3.90689");
        assert_eq!(format_sig(200000.0), "200000");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(-2.5), "-2.5");
        assert_eq!(format_sig(0.00012), "0.00012");
        assert_eq!(format_sig(1e-7), "1e-7");
        assert_eq!(format_sig(1.234567e-7), "1.23457e-7");
        assert_eq!(format_sig(1e18), "1e18");
        assert_eq!(format_sig(123456789.0), "123457000");
    }
}
