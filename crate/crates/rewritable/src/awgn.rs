//! Gaussian cell: offset estimation from repeated probes, a staged
//! write-budget bound, and a comb-label code that spends leftover writes on
//! timing information.
//!
//! A cell holds a fixed offset `S ~ N(0, sigma_s2)`; every write of stimulus
//! `x` returns `x + W + S` with fresh `W ~ N(0, N)`. Probing the cell `l`
//! times with a known stimulus and averaging gives the minimum-variance
//! estimate of `S`; the residual inflates the write noise from `N` to
//! `N_eff(l) = N (1 + sigma_s2 / (l sigma_s2 + N))`, which falls back to
//! `N` as `l` grows. A budget of `kappa` writes per cell then splits into
//! `l` probes plus `kappa - l` data writes, worth
//! `1/2 log2(1 + P/N_eff(l)) + log2(kappa - l)` bits.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{AwgnChannelParams, Channel};
use crate::envelope::ConcaveEnvelope;
use crate::quadrature::GaussLegendre;
use crate::{ceil_eps, floor_eps, Error, Result};

/// Offset estimate after `l` probe writes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    /// Number of probes consumed.
    pub l: u32,
    /// Posterior mean of the offset.
    pub s_hat: f64,
    /// Variance of the estimate itself, `l sigma_s2^2 / (l sigma_s2 + N)`;
    /// the residual error variance is `sigma_s2 - sigma2_sl`.
    pub sigma2_sl: f64,
    /// Effective write noise after estimation.
    pub n_eff: f64,
    /// Precoding coefficient `P / (P + N_eff)`.
    pub alpha: f64,
}

/// Effective noise variance seen by a data write after `l` probes:
/// `N (1 + sigma_s2 / (l sigma_s2 + N))`. At `l = 0` this is `N + sigma_s2`
/// and it decreases monotonically toward `N`.
pub fn effective_noise(n: f64, sigma_s2: f64, l: u32) -> f64 {
    n * (1.0 + sigma_s2 / (l as f64 * sigma_s2 + n))
}

/// Minimum-mean-square-error estimate of the offset from probe outputs,
/// each written with the known stimulus `probe_c`.
pub fn mmse_estimate(
    params: &AwgnChannelParams,
    outputs: &[f64],
    probe_c: f64,
) -> EstimationResult {
    let l = outputs.len() as u32;
    let lf = l as f64;
    let denom = lf * params.sigma_s2 + params.n;
    let residual_sum: f64 = outputs.iter().map(|y| y - probe_c).sum();
    EstimationResult {
        l,
        s_hat: params.sigma_s2 / denom * residual_sum,
        sigma2_sl: lf * params.sigma_s2 * params.sigma_s2 / denom,
        n_eff: effective_noise(params.n, params.sigma_s2, l),
        alpha: params.p / (params.p + effective_noise(params.n, params.sigma_s2, l)),
    }
}

fn validate_awgn_scalars(p: f64, n: f64, sigma_s2: f64) -> Result<()> {
    AwgnChannelParams::new(n, sigma_s2, p).map(|_| ())
}

/// Rate of a single data write after `l` probes:
/// `1/2 log2(1 + P / N_eff(l))` bits.
pub fn single_write_rate(p: f64, n: f64, sigma_s2: f64, l: u32) -> Result<f64> {
    validate_awgn_scalars(p, n, sigma_s2)?;
    Ok(0.5 * (1.0 + p / effective_noise(n, sigma_s2, l)).log2())
}

/// A point of the staged lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop1Point {
    /// Bound value in bits per cell.
    pub rate_bits: f64,
    /// Probe count attaining the inner maximum at `floor(kappa)`.
    pub best_l: u32,
}

fn staged_inner(p: f64, n: f64, sigma_s2: f64, kappa: f64, l: u32) -> f64 {
    0.5 * (1.0 + p / effective_noise(n, sigma_s2, l)).log2() + (kappa - l as f64).log2()
}

/// Staged lower bound on the rate at average write budget `kappa >= 1`:
/// the upper concave envelope over budgets of
/// `max_l [ 1/2 log2(1 + P/N_eff(l)) + log2(kappa - l) ]` with the maximum
/// over integer probe counts `0 <= l < kappa`.
pub fn prop1_bound(p: f64, n: f64, sigma_s2: f64, kappa: f64) -> Result<Prop1Point> {
    validate_awgn_scalars(p, n, sigma_s2)?;
    if !kappa.is_finite() || kappa < 1.0 {
        return Err(Error::InvalidParams(format!(
            "write budget kappa must be at least 1, got {kappa}"
        )));
    }
    let k_hi = ceil_eps(kappa).max(1.0) as u32;
    let argmax = |k: f64| -> (f64, u32) {
        let mut best = (f64::NEG_INFINITY, 0u32);
        let mut l = 0u32;
        while (l as f64) < k - 1e-12 {
            let v = staged_inner(p, n, sigma_s2, k, l);
            if v > best.0 {
                best = (v, l);
            }
            l += 1;
        }
        best
    };
    let points: Vec<(f64, f64)> = (1..=k_hi)
        .map(|k| (k as f64, argmax(k as f64).0))
        .collect();
    let rate_bits = if points.len() == 1 {
        argmax(kappa).0
    } else {
        ConcaveEnvelope::from_points(&points)?.eval(kappa)
    };
    let best_l = argmax(floor_eps(kappa).max(1.0)).1;
    Ok(Prop1Point { rate_bits, best_l })
}

/// Periodic label partition: output `y` gets label
/// `(floor(y/delta) mod k) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombLayout {
    delta: f64,
    k: u32,
}

impl CombLayout {
    pub fn new(delta: f64, k: u32) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "tooth width delta must be positive, got {delta}"
            )));
        }
        if k < 1 {
            return Err(Error::InvalidParams("label count k must be >= 1".into()));
        }
        Ok(Self { delta, k })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Label in `1..=k` of an output value.
    pub fn label(&self, y: f64) -> u32 {
        let tooth = (y / self.delta).floor() as i64;
        tooth.rem_euclid(self.k as i64) as u32 + 1
    }
}

/// Exact label probabilities when the output is `N(mean, var)`: per-tooth
/// Gaussian mass accumulated by label over `mean +- 8 sd`, then normalized.
pub fn label_probabilities_analytic(comb: &CombLayout, mean: f64, var: f64) -> Result<Vec<f64>> {
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "output variance must be positive, got {var}"
        )));
    }
    let sd = var.sqrt();
    let gl = GaussLegendre::new(16)?;
    let density = |y: f64| {
        let z = (y - mean) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let lo_tooth = ((mean - 8.0 * sd) / comb.delta).floor() as i64;
    let hi_tooth = ((mean + 8.0 * sd) / comb.delta).floor() as i64;
    let mut mass = vec![0.0f64; comb.k as usize];
    for tooth in lo_tooth..=hi_tooth {
        let lo = tooth as f64 * comb.delta;
        let label = tooth.rem_euclid(comb.k as i64) as usize;
        mass[label] += gl.integrate(density, lo, lo + comb.delta);
    }
    let total: f64 = mass.iter().sum();
    Ok(mass.iter().map(|m| m / total).collect())
}

/// Largest deviation of a label distribution from uniform.
pub fn max_label_deviation(probs: &[f64]) -> f64 {
    let uniform = 1.0 / probs.len() as f64;
    probs
        .iter()
        .map(|p| (p - uniform).abs())
        .fold(0.0, f64::max)
}

/// Empirical label frequencies of repeated writes of stimulus `x` to a cell
/// with fixed offset `s`.
pub fn label_frequencies<R: Rng + ?Sized>(
    params: &AwgnChannelParams,
    comb: &CombLayout,
    x: f64,
    s: f64,
    trials: u64,
    rng: &mut R,
) -> Vec<f64> {
    let mut counts = vec![0u64; comb.k as usize];
    for _ in 0..trials {
        let w: f64 = rng.sample::<f64, _>(StandardNormal) * params.n.sqrt();
        counts[(comb.label(x + w + s) - 1) as usize] += 1;
    }
    counts.iter().map(|c| *c as f64 / trials as f64).collect()
}

/// Outcome of [`simulate_superposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionStats {
    pub trials: u64,
    /// Mean writes per cell including probes; targets `kappa`.
    pub mean_total_writes: f64,
    /// Mean data writes after the probes; targets `kappa - l`.
    pub mean_post_writes: f64,
    /// Standard error of the total write count.
    pub stderr_total: f64,
    /// Final-label histogram, index `label - 1`.
    pub label_counts: Vec<u64>,
    /// Episodes whose final label missed the target (write cap hit).
    pub decode_errors: u64,
}

pub(crate) struct SuperpositionTrial {
    pub total: u64,
    pub label: u32,
    pub error: bool,
}

/// One episode of the estimate-then-label scheme: `l` probes of stimulus 0,
/// offset estimation, then rewrites of stimulus 0 until the comb label of
/// the offset-corrected output matches a uniformly drawn target label.
pub(crate) fn superposition_trial<R: Rng + ?Sized>(
    params: &AwgnChannelParams,
    l: u32,
    comb: &CombLayout,
    state: crate::channel::CellState,
    max_writes: u64,
    rng: &mut R,
) -> SuperpositionTrial {
    let probes: Vec<f64> = (0..l).map(|_| params.write_once(state, 0.0, rng)).collect();
    let est = mmse_estimate(params, &probes, 0.0);
    let target = rng.gen_range(1..=comb.k());
    let mut post = 0u64;
    let mut label = target;
    let mut error = false;
    loop {
        if post >= max_writes {
            error = true;
            break;
        }
        let y = params.write_once(state, 0.0, rng);
        post += 1;
        label = comb.label(y - est.s_hat);
        if label == target {
            break;
        }
    }
    SuperpositionTrial {
        total: l as u64 + post,
        label,
        error,
    }
}

/// Simulate the estimate-then-label scheme: probe `l` times with stimulus 0,
/// estimate the offset, then rewrite (stimulus 0) until the comb label of
/// the offset-corrected output matches a uniformly drawn target among
/// `k = kappa - l` labels. Tooth width `delta` controls how uniform the
/// labels are; the mean total write count approaches `kappa` as
/// `delta -> 0`.
pub fn simulate_superposition<R: Rng + ?Sized>(
    params: &AwgnChannelParams,
    l: u32,
    kappa: u32,
    delta: f64,
    trials: u64,
    rng: &mut R,
) -> Result<SuperpositionStats> {
    if kappa <= l {
        return Err(Error::InvalidParams(format!(
            "budget kappa = {kappa} leaves no data writes after {l} probes"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    let k = kappa - l;
    let comb = CombLayout::new(delta, k)?;
    let max_writes = 1_000_000u64;
    let mut label_counts = vec![0u64; k as usize];
    let mut decode_errors = 0u64;
    let mut sum_total = 0u128;
    let mut sum_sq = 0u128;
    let mut sum_post = 0u128;
    for _ in 0..trials {
        let state = params.sample_state(rng);
        let out = superposition_trial(params, l, &comb, state, max_writes, rng);
        if out.error {
            decode_errors += 1;
        }
        label_counts[(out.label - 1) as usize] += 1;
        sum_total += out.total as u128;
        sum_sq += (out.total as u128) * (out.total as u128);
        sum_post += (out.total - l as u64) as u128;
    }
    let nf = trials as f64;
    let mean_total = sum_total as f64 / nf;
    let var = (sum_sq as f64 / nf - mean_total * mean_total).max(0.0);
    Ok(SuperpositionStats {
        trials,
        mean_total_writes: mean_total,
        mean_post_writes: sum_post as f64 / nf,
        stderr_total: (var / nf).sqrt(),
        label_counts,
        decode_errors,
    })
}

/// Rate of dirty-paper precoding against a known Gaussian interference
/// component of variance `sigma2_known`, computed from the mutual
/// information difference `I(U;Y) - I(U;S_hat)` with
/// `U = X + alpha S_hat`, `Y = X + S_hat + Z`, `alpha = P/(P+N_eff)`.
///
/// The difference collapses to `1/2 log2(1 + P/N_eff)` for every
/// interference variance; the function asserts this identity to `1e-9`
/// and returns the value.
pub fn gaussian_gp_rate(p: f64, n_eff: f64, sigma2_known: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || !n_eff.is_finite() || n_eff <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "power and effective noise must be positive, got P = {p}, N_eff = {n_eff}"
        )));
    }
    if !sigma2_known.is_finite() || sigma2_known < 0.0 {
        return Err(Error::InvalidParams(format!(
            "known interference variance must be nonnegative, got {sigma2_known}"
        )));
    }
    let s = sigma2_known;
    let alpha = p / (p + n_eff);
    let var_u = p + alpha * alpha * s;
    let var_y = p + s + n_eff;
    let cov_uy = p + alpha * s;
    let i_uy = 0.5 * (var_u * var_y / (var_u * var_y - cov_uy * cov_uy)).log2();
    let i_us = 0.5 * (var_u / p).log2();
    let rate = i_uy - i_us;
    let closed = 0.5 * (1.0 + p / n_eff).log2();
    assert!(
        (rate - closed).abs() <= 1e-9,
        "precoding rate {rate} deviates from 1/2 log2(1+P/N_eff) = {closed}"
    );
    Ok(rate)
}
