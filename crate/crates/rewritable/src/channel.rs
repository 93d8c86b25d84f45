//! The rewritable cell: hidden-offset additive channels and rewrite episodes.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Default per-cell write cap. The schemes here have almost-surely-finite
/// episode length; the cap turns pathological configurations into explicit
/// [`Error::MaxWritesExceeded`] instead of a hang.
pub const DEFAULT_MAX_WRITES: u64 = 1_000_000;

/// Cell with bounded uniform write noise and a bounded hidden offset.
///
/// Each write of stimulus `x` settles at `y = x + w + s` with
/// `w ~ Uniform[-a/2, a/2]` drawn fresh per attempt and `s ~ Uniform[0, B]`
/// fixed per cell. The analysis of the region codes assumes `B < a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformChannelParams {
    /// Write-noise support width `a`.
    pub a: f64,
    /// Offset support width `B`. Zero is the degenerate no-offset cell.
    pub b: f64,
}

impl UniformChannelParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "noise width a must be positive and finite, got {a}"
            )));
        }
        if !b.is_finite() || b < 0.0 {
            return Err(Error::InvalidParams(format!(
                "offset width B must be nonnegative and finite, got {b}"
            )));
        }
        if b >= a {
            return Err(Error::InvalidParams(format!(
                "offset width B must be smaller than noise width a, got B={b}, a={a}"
            )));
        }
        Ok(Self { a, b })
    }
}

/// Cell with Gaussian write noise and a Gaussian hidden offset.
///
/// `y = x + w + s` with `w ~ Normal(0, N)` fresh per attempt and
/// `s ~ Normal(0, sigma_s2)` fixed per cell; `p` is the average input power
/// budget of the coding layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannelParams {
    /// Write-noise variance `N`.
    pub n: f64,
    /// Offset variance.
    pub sigma_s2: f64,
    /// Average input power budget `P`.
    pub p: f64,
}

impl AwgnChannelParams {
    pub fn new(n: f64, sigma_s2: f64, p: f64) -> Result<Self> {
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "noise variance N must be positive and finite, got {n}"
            )));
        }
        if !sigma_s2.is_finite() || sigma_s2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "offset variance must be nonnegative and finite, got {sigma_s2}"
            )));
        }
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "power budget P must be positive and finite, got {p}"
            )));
        }
        Ok(Self { n, sigma_s2, p })
    }
}

/// Realized hidden offset of one cell, fixed across all writes to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub s: f64,
}

/// A cell model: how offsets are drawn and what one write attempt returns.
pub trait Channel {
    /// Draw the per-cell offset.
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> CellState;
    /// One write attempt: fresh noise, fixed offset.
    fn write_once<R: Rng + ?Sized>(&self, state: CellState, x: f64, rng: &mut R) -> f64;
}

impl Channel for UniformChannelParams {
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> CellState {
        let s = if self.b == 0.0 {
            0.0
        } else {
            rng.gen_range(0.0..self.b)
        };
        CellState { s }
    }

    fn write_once<R: Rng + ?Sized>(&self, state: CellState, x: f64, rng: &mut R) -> f64 {
        let w = rng.gen_range(-self.a / 2.0..self.a / 2.0);
        x + w + state.s
    }
}

impl Channel for AwgnChannelParams {
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> CellState {
        let z: f64 = rng.sample(StandardNormal);
        CellState {
            s: self.sigma_s2.sqrt() * z,
        }
    }

    fn write_once<R: Rng + ?Sized>(&self, state: CellState, x: f64, rng: &mut R) -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        x + self.n.sqrt() * w + state.s
    }
}

/// One cell's rewrite episode: the stimuli applied and the outputs observed.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteTrace {
    pub stimuli: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl WriteTrace {
    /// Number of write attempts the episode took.
    pub fn tau(&self) -> u64 {
        self.outputs.len() as u64
    }

    /// The settled output, i.e. the last observed value.
    pub fn final_y(&self) -> f64 {
        *self
            .outputs
            .last()
            .expect("a write trace contains at least one write")
    }
}

/// Adaptive write policy. Both methods see the full history of outputs for
/// the current cell, which is enough memory for switching policies of the
/// form "have I ever observed an output past a threshold".
pub trait WriteStrategy {
    /// Stimulus for the next attempt given all outputs so far (the slice is
    /// empty before the first write).
    fn stimulus(&self, outputs: &[f64]) -> f64;
    /// Whether to stop after the last output in `outputs` (never called with
    /// an empty slice).
    fn is_done(&self, outputs: &[f64]) -> bool;
}

/// Write repeatedly until the strategy's stop predicate holds.
///
/// Errors with [`Error::MaxWritesExceeded`] after `max_writes` attempts,
/// which callers should treat as a mis-specified target region.
pub fn rewrite_until<C, S, R>(
    channel: &C,
    state: CellState,
    strategy: &S,
    rng: &mut R,
    max_writes: u64,
) -> Result<WriteTrace>
where
    C: Channel,
    S: WriteStrategy + ?Sized,
    R: Rng + ?Sized,
{
    let mut stimuli = Vec::new();
    let mut outputs = Vec::new();
    loop {
        if outputs.len() as u64 >= max_writes {
            return Err(Error::MaxWritesExceeded { max_writes });
        }
        let x = strategy.stimulus(&outputs);
        let y = channel.write_once(state, x, rng);
        stimuli.push(x);
        outputs.push(y);
        if strategy.is_done(&outputs) {
            return Ok(WriteTrace { stimuli, outputs });
        }
    }
}
