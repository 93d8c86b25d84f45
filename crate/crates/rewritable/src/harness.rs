//! Deterministic Monte Carlo driver for the write schemes.
//!
//! Every trial owns an RNG stream derived from `(seed, trial index)`, so a
//! run's statistics are a pure function of the configuration: worker count
//! and scheduling cannot change any reported number. Trials are processed
//! in fixed blocks; per-block tallies use integer accumulators and are
//! folded in block order, so means, standard errors, and the CSV report are
//! byte-identical across thread counts. Wall time is reported only in the
//! human-readable display, never in the CSV.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::awgn::{superposition_trial, CombLayout};
use crate::c1::{c1_decode_cell, c1_encode_cell, C1Layout, C1RegionId};
use crate::c2::{
    c2_encode_exterior, c2_encode_interior, per_state_expected_writes, C2Layout, C2RegionId,
    SwitchingPolicy,
};
use crate::channel::{AwgnChannelParams, CellState, Channel, UniformChannelParams};
use crate::quadrature::integrate_piecewise;
use crate::{format_sig, Error, Result};

/// How the hidden per-cell offset is drawn for each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    /// The channel's own offset prior.
    Random,
    /// A single fixed offset value.
    Fixed(f64),
    /// Uniform over `[lo, hi)`.
    Range { lo: f64, hi: f64 },
}

/// Which scheme an experiment drives.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    /// Stimulus-shifting code on the uniform cell. `region = None` draws a
    /// fresh uniform message per trial.
    C1 {
        a: f64,
        b: f64,
        kappa: u32,
        region: Option<(u32, u32)>,
    },
    /// Exterior-only episodes of the interior/exterior code.
    C2Exterior {
        a: f64,
        b: f64,
        m: u32,
        i: Option<u32>,
        deltas: Vec<f64>,
    },
    /// Full interior/exterior code with interior probability `p`.
    C2Mixed {
        a: f64,
        b: f64,
        d: f64,
        m: u32,
        p: f64,
        deltas: Vec<f64>,
    },
    /// Estimate-then-label scheme on the Gaussian cell.
    Superposition {
        n: f64,
        sigma_s2: f64,
        power: f64,
        l: u32,
        kappa: u32,
        delta: f64,
    },
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeSpec,
    pub trials: u64,
    pub seed: u64,
    /// 0 uses the process-wide default thread pool.
    pub workers: usize,
    pub max_writes: u64,
    pub state: StateSpec,
}

/// Aggregated outcome of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trials: u64,
    /// Mean writes per cell.
    pub mean_writes: f64,
    pub stderr_writes: f64,
    /// Final-region histogram in a fixed region order.
    pub region_hits: Vec<(String, u64)>,
    /// Episodes whose final output did not decode to the target.
    pub decode_errors: u64,
    /// Plug-in entropy of the final-region histogram, bits per cell.
    pub empirical_rate_bits: f64,
    /// Not part of the CSV report; scheduling noise only.
    pub wall: Duration,
}

impl ExperimentReport {
    /// Deterministic CSV with schema `metric,value,stderr`; count metrics
    /// leave the stderr column empty. Wall time is deliberately absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,stderr\n");
        out.push_str(&format!("trials,{},\n", self.trials));
        out.push_str(&format!(
            "mean_writes,{},{}\n",
            format_sig(self.mean_writes),
            format_sig(self.stderr_writes)
        ));
        out.push_str(&format!("decode_errors,{},\n", self.decode_errors));
        out.push_str(&format!(
            "empirical_rate_bits,{},\n",
            format_sig(self.empirical_rate_bits)
        ));
        for (name, count) in &self.region_hits {
            out.push_str(&format!("hits_{name},{count},\n"));
        }
        out
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials              {}", self.trials)?;
        writeln!(
            f,
            "mean writes/cell    {} (se {})",
            format_sig(self.mean_writes),
            format_sig(self.stderr_writes)
        )?;
        writeln!(f, "decode errors       {}", self.decode_errors)?;
        writeln!(
            f,
            "empirical rate      {} bits",
            format_sig(self.empirical_rate_bits)
        )?;
        writeln!(f, "regions observed    {}", self.region_hits.len())?;
        write!(f, "wall time           {:.3}s", self.wall.as_secs_f64())
    }
}

enum SchemeCtx {
    C1 {
        layout: C1Layout,
        channel: UniformChannelParams,
        region: Option<C1RegionId>,
    },
    C2Exterior {
        layout: C2Layout,
        channel: UniformChannelParams,
        policy: SwitchingPolicy,
        region: Option<u32>,
    },
    C2Mixed {
        layout: C2Layout,
        channel: UniformChannelParams,
        policy: SwitchingPolicy,
        p: f64,
    },
    Superposition {
        params: AwgnChannelParams,
        l: u32,
        comb: CombLayout,
    },
}

impl SchemeCtx {
    fn build(spec: &SchemeSpec) -> Result<Self> {
        Ok(match spec {
            SchemeSpec::C1 { a, b, kappa, region } => {
                let layout = C1Layout::new(*a, *b, *kappa)?;
                let region = match region {
                    Some((interval, sub)) => {
                        let id = C1RegionId {
                            interval: *interval,
                            sub: *sub,
                        };
                        layout.pieces(id)?;
                        Some(id)
                    }
                    None => None,
                };
                SchemeCtx::C1 {
                    layout,
                    channel: UniformChannelParams::new(*a, *b)?,
                    region,
                }
            }
            SchemeSpec::C2Exterior { a, b, m, i, deltas } => {
                // Interior width is irrelevant for exterior episodes; any
                // valid value works.
                let layout = C2Layout::new(*a, *b, (*a - *b) / 2.0, *m)?;
                let policy = SwitchingPolicy::from_deltas(deltas.clone())?;
                if policy.m() != *m {
                    return Err(Error::InvalidParams(format!(
                        "expected {m} switching thresholds, got {}",
                        policy.m()
                    )));
                }
                if let Some(i) = i {
                    layout.exterior_pieces(*i)?;
                }
                SchemeCtx::C2Exterior {
                    layout,
                    channel: UniformChannelParams::new(*a, *b)?,
                    policy,
                    region: *i,
                }
            }
            SchemeSpec::C2Mixed { a, b, d, m, p, deltas } => {
                if !p.is_finite() || !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParams(format!(
                        "interior probability p must lie in [0, 1], got {p}"
                    )));
                }
                let layout = C2Layout::new(*a, *b, *d, *m)?;
                let policy = SwitchingPolicy::from_deltas(deltas.clone())?;
                if policy.m() != *m {
                    return Err(Error::InvalidParams(format!(
                        "expected {m} switching thresholds, got {}",
                        policy.m()
                    )));
                }
                SchemeCtx::C2Mixed {
                    layout,
                    channel: UniformChannelParams::new(*a, *b)?,
                    policy,
                    p: *p,
                }
            }
            SchemeSpec::Superposition {
                n,
                sigma_s2,
                power,
                l,
                kappa,
                delta,
            } => {
                if kappa <= l {
                    return Err(Error::InvalidParams(format!(
                        "budget kappa = {kappa} leaves no data writes after {l} probes"
                    )));
                }
                SchemeCtx::Superposition {
                    params: AwgnChannelParams::new(*n, *sigma_s2, *power)?,
                    l: *l,
                    comb: CombLayout::new(*delta, *kappa - *l)?,
                }
            }
        })
    }

    fn region_names(&self) -> Vec<String> {
        match self {
            SchemeCtx::C1 { layout, .. } => {
                let mut names = Vec::new();
                for interval in 0..layout.n_intervals() {
                    for sub in 1..=layout.kappa() {
                        names.push(format!("{interval}:{sub}"));
                    }
                }
                names
            }
            SchemeCtx::C2Exterior { layout, .. } => {
                (1..=2 * layout.m()).map(|i| format!("ext{i}")).collect()
            }
            SchemeCtx::C2Mixed { layout, .. } => {
                let mut names: Vec<String> =
                    (0..layout.n_interior()).map(|j| format!("int{j}")).collect();
                names.extend((1..=2 * layout.m()).map(|i| format!("ext{i}")));
                names
            }
            SchemeCtx::Superposition { comb, .. } => {
                (1..=comb.k()).map(|l| format!("label{l}")).collect()
            }
        }
    }

    fn sample_state<R: Rng + ?Sized>(&self, spec: &StateSpec, rng: &mut R) -> CellState {
        match spec {
            StateSpec::Random => match self {
                SchemeCtx::C1 { channel, .. }
                | SchemeCtx::C2Exterior { channel, .. }
                | SchemeCtx::C2Mixed { channel, .. } => channel.sample_state(rng),
                SchemeCtx::Superposition { params, .. } => params.sample_state(rng),
            },
            StateSpec::Fixed(s) => CellState { s: *s },
            StateSpec::Range { lo, hi } => CellState {
                s: rng.gen_range(*lo..*hi),
            },
        }
    }

    /// Run one trial; returns writes spent, index into the region name
    /// list, and whether the final output failed to decode to the target.
    fn trial<R: Rng + ?Sized>(
        &self,
        state_spec: &StateSpec,
        max_writes: u64,
        rng: &mut R,
    ) -> Result<(u64, usize, bool)> {
        match self {
            SchemeCtx::C1 { layout, region, .. } => {
                let target = region.unwrap_or_else(|| C1RegionId {
                    interval: rng.gen_range(0..layout.n_intervals()),
                    sub: rng.gen_range(1..=layout.kappa()),
                });
                let state = self.sample_state(state_spec, rng);
                let trace = c1_encode_cell(layout, target, state, rng, max_writes)?;
                let decoded = c1_decode_cell(layout, trace.final_y())?;
                let idx = (target.interval * layout.kappa() + target.sub - 1) as usize;
                Ok((trace.tau(), idx, decoded != target))
            }
            SchemeCtx::C2Exterior {
                layout,
                policy,
                region,
                ..
            } => {
                let target = region.unwrap_or_else(|| rng.gen_range(1..=2 * layout.m()));
                let state = self.sample_state(state_spec, rng);
                let trace = c2_encode_exterior(layout, policy, target, state, rng, max_writes)?;
                let decoded = layout.decode(trace.final_y())?;
                Ok((
                    trace.tau(),
                    (target - 1) as usize,
                    decoded != C2RegionId::Exterior(target),
                ))
            }
            SchemeCtx::C2Mixed {
                layout,
                policy,
                p,
                ..
            } => {
                let interior = rng.gen_bool(*p);
                let state = self.sample_state(state_spec, rng);
                if interior {
                    let j = rng.gen_range(0..layout.n_interior());
                    let trace = c2_encode_interior(layout, j, state, rng, max_writes)?;
                    let decoded = layout.decode(trace.final_y())?;
                    Ok((trace.tau(), j as usize, decoded != C2RegionId::Interior(j)))
                } else {
                    let i = rng.gen_range(1..=2 * layout.m());
                    let trace = c2_encode_exterior(layout, policy, i, state, rng, max_writes)?;
                    let decoded = layout.decode(trace.final_y())?;
                    Ok((
                        trace.tau(),
                        (layout.n_interior() + i - 1) as usize,
                        decoded != C2RegionId::Exterior(i),
                    ))
                }
            }
            SchemeCtx::Superposition { params, l, comb } => {
                let state = self.sample_state(state_spec, rng);
                let out = superposition_trial(params, *l, comb, state, max_writes, rng);
                Ok((out.total, (out.label - 1) as usize, out.error))
            }
        }
    }
}

fn validate_state_spec(spec: &StateSpec, scheme: &SchemeSpec) -> Result<()> {
    let uniform_b = match scheme {
        SchemeSpec::C1 { b, .. }
        | SchemeSpec::C2Exterior { b, .. }
        | SchemeSpec::C2Mixed { b, .. } => Some(*b),
        SchemeSpec::Superposition { .. } => None,
    };
    match spec {
        StateSpec::Random => Ok(()),
        StateSpec::Fixed(s) => {
            if !s.is_finite() {
                return Err(Error::InvalidParams(format!("offset must be finite, got {s}")));
            }
            if let Some(b) = uniform_b {
                if *s < 0.0 || *s > b {
                    return Err(Error::InvalidParams(format!(
                        "fixed offset {s} outside the support [0, {b}]"
                    )));
                }
            }
            Ok(())
        }
        StateSpec::Range { lo, hi } => {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidParams(format!(
                    "offset range [{lo}, {hi}) is empty or not finite"
                )));
            }
            if let Some(b) = uniform_b {
                if *lo < 0.0 || *hi > b {
                    return Err(Error::InvalidParams(format!(
                        "offset range [{lo}, {hi}) outside the support [0, {b}]"
                    )));
                }
            }
            Ok(())
        }
    }
}

const BLOCK: u64 = 8192;

#[derive(Clone)]
struct BlockTally {
    sum_tau: u128,
    sum_tau2: u128,
    hits: Vec<u64>,
    errors: u64,
}

/// Run the configured experiment. Results depend only on the configuration
/// (seed included), never on `workers`; the first failing trial, if any,
/// aborts the run with its index.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    if config.max_writes == 0 {
        return Err(Error::InvalidParams("max_writes must be >= 1".into()));
    }
    if config.workers > 4096 {
        return Err(Error::InvalidParams(format!(
            "workers must be at most 4096, got {}",
            config.workers
        )));
    }
    validate_state_spec(&config.state, &config.scheme)?;
    let ctx = SchemeCtx::build(&config.scheme)?;
    let names = ctx.region_names();
    let started = Instant::now();

    let run_block = |block: u64| -> Result<BlockTally> {
        let mut tally = BlockTally {
            sum_tau: 0,
            sum_tau2: 0,
            hits: vec![0u64; names.len()],
            errors: 0,
        };
        let lo = block * BLOCK;
        let hi = ((block + 1) * BLOCK).min(config.trials);
        for t in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t);
            let (tau, idx, error) = ctx
                .trial(&config.state, config.max_writes, &mut rng)
                .map_err(|e| Error::TrialFailed {
                    index: t,
                    source: Box::new(e),
                })?;
            tally.sum_tau += tau as u128;
            tally.sum_tau2 += (tau as u128) * (tau as u128);
            tally.hits[idx] += 1;
            if error {
                tally.errors += 1;
            }
        }
        Ok(tally)
    };

    let blocks = config.trials.div_ceil(BLOCK);
    let results: Vec<Result<BlockTally>> = if config.workers == 1 {
        (0..blocks).map(run_block).collect()
    } else if config.workers == 0 {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("cannot build thread pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(run_block).collect())
    };

    let mut sum_tau = 0u128;
    let mut sum_tau2 = 0u128;
    let mut hits = vec![0u64; names.len()];
    let mut errors = 0u64;
    for result in results {
        let tally = result?;
        sum_tau += tally.sum_tau;
        sum_tau2 += tally.sum_tau2;
        for (acc, h) in hits.iter_mut().zip(&tally.hits) {
            *acc += h;
        }
        errors += tally.errors;
    }

    let n = config.trials as f64;
    let mean = sum_tau as f64 / n;
    let stderr = if config.trials > 1 {
        let var = (sum_tau2 as f64 - (sum_tau as f64) * (sum_tau as f64) / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    } else {
        0.0
    };
    let entropy = hits
        .iter()
        .filter(|c| **c > 0)
        .map(|c| {
            let f = *c as f64 / n;
            -f * f.log2()
        })
        .sum();

    Ok(ExperimentReport {
        trials: config.trials,
        mean_writes: mean,
        stderr_writes: stderr,
        region_hits: names.into_iter().zip(hits).collect(),
        decode_errors: errors,
        empirical_rate_bits: entropy,
        wall: started.elapsed(),
    })
}

/// Numerical check value for the exterior closed form: integrate the
/// per-offset expected write count over a uniform offset with at least
/// `points` quadrature nodes across the exact breakpoints.
pub fn oracle_expected_writes_numeric(
    a: f64,
    b: f64,
    m: u32,
    i: u32,
    delta: f64,
    points: usize,
) -> Result<f64> {
    if points < 100 {
        return Err(Error::InvalidParams(format!(
            "need at least 100 quadrature points, got {points}"
        )));
    }
    // Probe the validation logic once up front for a clean error.
    per_state_expected_writes(a, b, m, i, delta, 0.0)?;
    let two_m = 2.0 * m as f64;
    let mut cuts = vec![
        0.0,
        b * (i as f64 - 1.0) / two_m,
        b * (i as f64 - delta) / two_m,
        b * i as f64 / two_m,
        b,
    ];
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let integral = integrate_piecewise(
        |s| per_state_expected_writes(a, b, m, i, delta, s).unwrap(),
        &cuts,
        points,
    )?;
    Ok(integral / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c2::{c2_cost, expected_writes_exterior, solve_delta};

    const A: f64 = 1.0 / 3.0;
    const B: f64 = 1.0 / 6.0;

    fn mixed_config(trials: u64, workers: usize) -> ExperimentConfig {
        ExperimentConfig {
            scheme: SchemeSpec::C2Mixed {
                a: A,
                b: B,
                d: 0.1,
                m: 1,
                p: 0.7,
                deltas: vec![0.0],
            },
            trials,
            seed: 91,
            workers,
            max_writes: 1_000_000,
            state: StateSpec::Random,
        }
    }

    #[test]
    fn reports_are_identical_across_worker_counts() {
        let baseline = run_experiment(&mixed_config(20_000, 1)).unwrap().to_csv();
        for workers in [0usize, 4, 8] {
            let csv = run_experiment(&mixed_config(20_000, workers)).unwrap().to_csv();
            assert_eq!(csv, baseline, "workers={workers}");
        }
    }

    #[test]
    fn failing_trial_index_is_deterministic() {
        let mut config = mixed_config(50_000, 1);
        config.max_writes = 2;
        let index_of = |workers: usize| {
            let mut c = config.clone();
            c.workers = workers;
            match run_experiment(&c) {
                Err(Error::TrialFailed { index, source }) => {
                    assert!(matches!(*source, Error::MaxWritesExceeded { .. }));
                    index
                }
                other => panic!("expected a trial failure, got {other:?}"),
            }
        };
        let first = index_of(1);
        assert_eq!(index_of(4), first);
        assert_eq!(index_of(8), first);
    }

    #[test]
    fn single_trial_reports_its_exact_write_count() {
        let config = ExperimentConfig {
            scheme: SchemeSpec::C1 {
                a: A,
                b: B,
                kappa: 5,
                region: Some((1, 2)),
            },
            trials: 1,
            seed: 7,
            workers: 1,
            max_writes: 1_000_000,
            state: StateSpec::Fixed(0.1),
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.stderr_writes, 0.0);
        assert_eq!(report.mean_writes.fract(), 0.0);
        assert!(report.mean_writes >= 1.0);
        assert_eq!(report.decode_errors, 0);
        assert_eq!(report.empirical_rate_bits, 0.0);
        let hits: u64 = report.region_hits.iter().map(|(_, c)| c).sum();
        assert_eq!(hits, 1);
    }

    #[test]
    fn uniform_messages_reach_the_code_rate() {
        let config = ExperimentConfig {
            scheme: SchemeSpec::C1 {
                a: A,
                b: B,
                kappa: 3,
                region: None,
            },
            trials: 150_000,
            seed: 11,
            workers: 0,
            max_writes: 1_000_000,
            state: StateSpec::Random,
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.decode_errors, 0);
        assert!((report.empirical_rate_bits - 9f64.log2()).abs() < 0.01);
        assert!((report.mean_writes - 3.0).abs() < 0.02);
    }

    #[test]
    fn mixed_cost_matches_the_formula() {
        let config = mixed_config(200_000, 0);
        let report = run_experiment(&config).unwrap();
        let want = c2_cost(A, B, 0.7, 0.1, 1, &[0.0]).unwrap();
        assert!(
            (report.mean_writes - want).abs() < 3.5 * report.stderr_writes,
            "mean {} want {want} se {}",
            report.mean_writes,
            report.stderr_writes
        );
        assert_eq!(report.decode_errors, 0);
    }

    #[test]
    fn range_state_restricts_the_offsets() {
        let config = ExperimentConfig {
            scheme: SchemeSpec::C2Exterior {
                a: A,
                b: B,
                m: 1,
                i: Some(1),
                deltas: vec![0.0],
            },
            trials: 20_000,
            seed: 5,
            workers: 0,
            max_writes: 1_000_000,
            state: StateSpec::Range {
                lo: B / 2.0,
                hi: B,
            },
        };
        // Offsets above B/2 make region 1 fully accessible on the high
        // rail: exactly 2a/B expected writes.
        let report = run_experiment(&config).unwrap();
        let want = 2.0 * A / B;
        assert!(
            (report.mean_writes - want).abs() < 3.5 * report.stderr_writes,
            "mean {} want {want}",
            report.mean_writes
        );
    }

    #[test]
    fn state_spec_validation() {
        let mut config = mixed_config(10, 1);
        config.state = StateSpec::Fixed(B * 1.5);
        assert!(run_experiment(&config).is_err());
        config.state = StateSpec::Range { lo: 0.1, hi: 0.1 };
        assert!(run_experiment(&config).is_err());
        config.state = StateSpec::Range { lo: 0.0, hi: B * 2.0 };
        assert!(run_experiment(&config).is_err());
    }

    #[test]
    fn oracle_integration_matches_closed_forms() {
        let v = oracle_expected_writes_numeric(A, B, 1, 1, 0.0, 2_000).unwrap();
        assert!((v - 3.0 * A / B).abs() < 1e-8, "got {v}");

        let d1 = solve_delta(1, 1e-12).unwrap();
        let v = oracle_expected_writes_numeric(A, B, 1, 1, d1, 2_000).unwrap();
        let want = expected_writes_exterior(A, B, 1, 1, d1).unwrap();
        assert!((v - want).abs() / want < 1e-6, "got {v} want {want}");

        let d3 = solve_delta(3, 1e-12).unwrap();
        let v = oracle_expected_writes_numeric(A, B, 4, 3, d3, 2_000).unwrap();
        let want = expected_writes_exterior(A, B, 4, 3, d3).unwrap();
        assert!((v - want).abs() / want < 1e-6, "got {v} want {want}");
    }

    #[test]
    fn superposition_runs_under_the_harness() {
        let config = ExperimentConfig {
            scheme: SchemeSpec::Superposition {
                n: 1.0,
                sigma_s2: 10.0,
                power: 100.0,
                l: 1,
                kappa: 6,
                delta: 0.001,
            },
            trials: 50_000,
            seed: 17,
            workers: 0,
            max_writes: 1_000_000,
            state: StateSpec::Random,
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.decode_errors, 0);
        assert!((report.mean_writes - 6.0).abs() < 0.1, "{}", report.mean_writes);
        assert!((report.empirical_rate_bits - 5f64.log2()).abs() < 0.01);
        assert_eq!(report.region_hits.len(), 5);
    }
}
