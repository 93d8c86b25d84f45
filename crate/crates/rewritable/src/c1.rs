//! Fixed-stimulus region code for the uniform cell.
//!
//! The output space is cut into `N_int = floor((1+a+B)/(a+B))` intervals of
//! width `a+B` (leftover space is discarded) and every interval is cut into
//! `kappa` two-piece target regions. Writing applies the constant stimulus
//! `(a+B)*i` for interval `i` and rewrites until the output decodes to the
//! target region. The two-piece geometry makes the accessible part of every
//! region have width exactly `a/kappa` no matter the hidden offset, so each
//! attempt hits with probability exactly `1/kappa` and the average write
//! cost is `kappa` independent of the offset. Rate: `log2(N_int * kappa)`
//! bits per cell.

use rand::Rng;

use crate::channel::{rewrite_until, CellState, UniformChannelParams, WriteStrategy, WriteTrace};
use crate::{floor_eps, Error, Result};

/// Region address: interval index and sub-region index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct C1RegionId {
    /// Interval index in `0..n_intervals`.
    pub interval: u32,
    /// Sub-region index in `1..=kappa`.
    pub sub: u32,
}

/// Geometry of the fixed-stimulus code.
#[derive(Debug, Clone, Copy)]
pub struct C1Layout {
    a: f64,
    b: f64,
    kappa: u32,
    n_intervals: u32,
}

/// Number of width-`(a+B)` intervals that fit in the output span.
fn interval_count(a: f64, b: f64) -> u32 {
    floor_eps((1.0 + a + b) / (a + b)) as u32
}

fn validate(a: f64, b: f64, kappa: u32) -> Result<()> {
    let params = UniformChannelParams::new(a, b)?;
    if params.b == 0.0 {
        return Err(Error::InvalidParams(
            "this code needs a positive offset width B".into(),
        ));
    }
    if kappa < 2 {
        return Err(Error::InvalidParams(format!(
            "integer write budget kappa must be at least 2, got {kappa}"
        )));
    }
    Ok(())
}

impl C1Layout {
    pub fn new(a: f64, b: f64, kappa: u32) -> Result<Self> {
        validate(a, b, kappa)?;
        Ok(Self {
            a,
            b,
            kappa,
            n_intervals: interval_count(a, b),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn n_intervals(&self) -> u32 {
        self.n_intervals
    }

    /// Total number of addressable regions, `n_intervals * kappa`.
    pub fn region_count(&self) -> u32 {
        self.n_intervals * self.kappa
    }

    /// Stimulus written for every attempt at a region of interval `i`.
    pub fn stimulus(&self, interval: u32) -> f64 {
        (self.a + self.b) * interval as f64
    }

    /// The two pieces of a region, clipped to the slice of output space the
    /// region's interval owns. The second piece shrinks (and eventually
    /// vanishes) for high sub-region indices.
    pub fn pieces(&self, region: C1RegionId) -> Result<[(f64, f64); 2]> {
        self.check_region(region)?;
        let base = self.stimulus(region.interval);
        let w = self.a / self.kappa as f64;
        let t = region.sub as f64;
        let p1 = (
            base - self.a / 2.0 + (t - 1.0) * w,
            base - self.a / 2.0 + t * w,
        );
        let hi_cap = base + self.a / 2.0 + self.b;
        let p2_lo = base + self.a / 2.0 + (t - 1.0) * w;
        let p2 = (p2_lo.min(hi_cap), (p2_lo + w).min(hi_cap));
        Ok([p1, p2])
    }

    fn check_region(&self, region: C1RegionId) -> Result<()> {
        if region.interval >= self.n_intervals || region.sub == 0 || region.sub > self.kappa {
            return Err(Error::InvalidParams(format!(
                "region {region:?} out of range for {} intervals x {} sub-regions",
                self.n_intervals, self.kappa
            )));
        }
        Ok(())
    }

    /// Map an output value to the unique region containing it.
    ///
    /// Boundaries are half-open `[lo, hi)`. Values in discarded output space
    /// (past the last interval) are [`Error::OutOfSupport`].
    pub fn decode(&self, y: f64) -> Result<C1RegionId> {
        let period = self.a + self.b;
        let shifted = (y + self.a / 2.0) / period;
        let i = shifted.floor();
        if i < 0.0 || i >= self.n_intervals as f64 {
            return Err(Error::OutOfSupport { y });
        }
        // Offset within the interval's slice, in [-a/2, a/2 + B).
        let u = y - i * period;
        let w = self.a / self.kappa as f64;
        let t = if u < self.a / 2.0 {
            ((u + self.a / 2.0) / w).floor()
        } else {
            ((u - self.a / 2.0) / w).floor()
        };
        let t = (t as i64).clamp(0, self.kappa as i64 - 1) as u32;
        Ok(C1RegionId {
            interval: i as u32,
            sub: t + 1,
        })
    }
}

struct C1Strategy<'a> {
    layout: &'a C1Layout,
    target: C1RegionId,
}

impl WriteStrategy for C1Strategy<'_> {
    fn stimulus(&self, _outputs: &[f64]) -> f64 {
        self.layout.stimulus(self.target.interval)
    }
    fn is_done(&self, outputs: &[f64]) -> bool {
        matches!(self.layout.decode(*outputs.last().unwrap()), Ok(r) if r == self.target)
    }
}

/// Write a cell: constant stimulus for the target's interval, rewriting
/// until the output decodes to the target region.
pub fn c1_encode_cell<R: Rng + ?Sized>(
    layout: &C1Layout,
    region: C1RegionId,
    state: CellState,
    rng: &mut R,
    max_writes: u64,
) -> Result<WriteTrace> {
    layout.check_region(region)?;
    let channel = UniformChannelParams::new(layout.a, layout.b)?;
    let strategy = C1Strategy {
        layout,
        target: region,
    };
    rewrite_until(&channel, state, &strategy, rng, max_writes)
}

/// Read a cell; inverse of [`c1_encode_cell`].
pub fn c1_decode_cell(layout: &C1Layout, y: f64) -> Result<C1RegionId> {
    layout.decode(y)
}

/// Achievable rate in bits per cell, `log2(kappa * N_int)`.
pub fn c1_rate(a: f64, b: f64, kappa: u32) -> Result<f64> {
    validate(a, b, kappa)?;
    Ok((kappa as f64 * interval_count(a, b) as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const A: f64 = 1.0 / 3.0;
    const B: f64 = 1.0 / 6.0;

    #[test]
    fn interval_count_examples() {
        let layout = C1Layout::new(A, B, 5).unwrap();
        assert_eq!(layout.n_intervals(), 3);
        assert_eq!(layout.region_count(), 15);

        let layout = C1Layout::new(0.25, 0.05, 4).unwrap();
        assert_eq!(layout.n_intervals(), 4);
        assert_eq!(layout.region_count(), 16);
        assert!((c1_rate(0.25, 0.05, 4).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        assert!((c1_rate(A, B, 5).unwrap() - 15f64.log2()).abs() < 1e-12);
        assert!((c1_rate(A, B, 2).unwrap() - 6f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(matches!(
            C1Layout::new(A, A, 5),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            C1Layout::new(A, 0.0, 5),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            C1Layout::new(A, B, 1),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn decode_boundary_conventions() {
        let layout = C1Layout::new(A, B, 5).unwrap();
        // Exactly on the first region's lower edge.
        let r = layout.decode(-A / 2.0).unwrap();
        assert_eq!(r, C1RegionId { interval: 0, sub: 1 });
        // Exactly on the edge between sub-regions 1 and 2 of piece one.
        let w = A / 5.0;
        let r = layout.decode(-A / 2.0 + w).unwrap();
        assert_eq!(r, C1RegionId { interval: 0, sub: 2 });
        // Second copy starts at +a/2.
        let r = layout.decode(A / 2.0).unwrap();
        assert_eq!(r, C1RegionId { interval: 0, sub: 1 });
        // Next interval's slice begins at a/2 + B.
        let r = layout.decode(A / 2.0 + B).unwrap();
        assert_eq!(r, C1RegionId { interval: 1, sub: 1 });
        // Below and above the used space.
        assert!(matches!(
            layout.decode(-A / 2.0 - 1e-9),
            Err(Error::OutOfSupport { .. })
        ));
        let top = 3.0 * (A + B) - A / 2.0;
        assert!(matches!(
            layout.decode(top + 1e-9),
            Err(Error::OutOfSupport { .. })
        ));
    }

    #[test]
    fn pieces_cover_width_a_over_kappa_of_window() {
        // The accessible overlap of every region is exactly a/kappa for any
        // offset in [0, B]: check by direct measure computation.
        let layout = C1Layout::new(A, B, 5).unwrap();
        for region in [
            C1RegionId { interval: 0, sub: 1 },
            C1RegionId { interval: 1, sub: 3 },
            C1RegionId { interval: 2, sub: 5 },
        ] {
            let pieces = layout.pieces(region).unwrap();
            let base = layout.stimulus(region.interval);
            for s_frac in [0.0, 0.21, 0.5, 0.84, 1.0] {
                let s = s_frac * B;
                let (w_lo, w_hi) = (base + s - A / 2.0, base + s + A / 2.0);
                let overlap: f64 = pieces
                    .iter()
                    .map(|&(lo, hi)| (hi.min(w_hi) - lo.max(w_lo)).max(0.0))
                    .sum();
                assert!(
                    (overlap - A / 5.0).abs() < 1e-12,
                    "region {region:?}, s={s}: overlap {overlap}"
                );
            }
        }
    }

    #[test]
    fn encode_decode_round_trip_fuzz() {
        let layout = C1Layout::new(A, B, 5).unwrap();
        let channel = UniformChannelParams::new(A, B).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20_000u32 {
            let region = C1RegionId {
                interval: trial % 3,
                sub: (trial / 3) % 5 + 1,
            };
            let state = channel.sample_state(&mut rng);
            let trace = c1_encode_cell(&layout, region, state, &mut rng, 1_000_000).unwrap();
            assert_eq!(layout.decode(trace.final_y()).unwrap(), region);
        }
    }

    #[test]
    fn mean_writes_is_kappa_and_state_independent() {
        let layout = C1Layout::new(A, B, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let region = C1RegionId { interval: 1, sub: 2 };
        let mut means = Vec::new();
        for s in [0.0, B * 0.9999] {
            let n = 200_000u64;
            let mut total = 0u64;
            for _ in 0..n {
                let trace =
                    c1_encode_cell(&layout, region, CellState { s }, &mut rng, 1_000_000).unwrap();
                total += trace.tau();
            }
            means.push(total as f64 / n as f64);
        }
        // Geometric with mean 5: SD ~ 4.47, so 3 standard errors at 2e5
        // trials is about 0.03.
        for mean in &means {
            assert!((mean - 5.0).abs() < 0.045, "mean {mean}");
        }
        assert!(
            (means[0] - means[1]).abs() < 0.06,
            "offset dependence: {means:?}"
        );
    }

    #[test]
    fn final_output_always_in_target_region() {
        let layout = C1Layout::new(A, B, 2).unwrap();
        let channel = UniformChannelParams::new(A, B).unwrap();
        let region = C1RegionId { interval: 0, sub: 1 };
        let pieces = layout.pieces(region).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5_000 {
            let state = channel.sample_state(&mut rng);
            let y = c1_encode_cell(&layout, region, state, &mut rng, 1_000_000)
                .unwrap()
                .final_y();
            let inside = pieces.iter().any(|&(lo, hi)| lo <= y && y < hi);
            assert!(inside, "final output {y} outside {pieces:?}");
        }
    }

    #[test]
    fn per_attempt_hit_probability_is_uniform_over_offsets() {
        // Hit/miss accounting at several fixed offsets: each attempt is an
        // independent Bernoulli(1/kappa) draw no matter the offset.
        let kappa = 4u32;
        let layout = C1Layout::new(A, B, kappa).unwrap();
        let channel = UniformChannelParams::new(A, B).unwrap();
        let region = C1RegionId { interval: 2, sub: 3 };
        let x = layout.stimulus(region.interval);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for s_frac in [0.0, 0.25, 0.5, 0.75, 0.999] {
            let state = CellState { s: s_frac * B };
            let n = 200_000u64;
            let mut hits = 0u64;
            for _ in 0..n {
                let y = channel.write_once(state, x, &mut rng);
                if layout.decode(y).map(|r| r == region).unwrap_or(false) {
                    hits += 1;
                }
            }
            let p_hat = hits as f64 / n as f64;
            let p = 1.0 / kappa as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (p_hat - p).abs() < 3.5 * se,
                "s={}: hit rate {p_hat} vs {p}",
                state.s
            );
        }
    }
}
