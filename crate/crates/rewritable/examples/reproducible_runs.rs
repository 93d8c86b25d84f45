//! The Monte Carlo harness gives every trial its own counter-derived RNG
//! stream, so the worker count changes wall time but never the numbers.
//! Runs the same experiment on one worker and on eight and compares the
//! reports byte for byte.
//!
//!     cargo run --example reproducible_runs

use rewritable::harness::{run_experiment, ExperimentConfig, SchemeSpec, StateSpec};
use rewritable::DEFAULT_MAX_WRITES;

fn main() {
    let config = ExperimentConfig {
        scheme: SchemeSpec::C2Mixed {
            a: 1.0 / 3.0,
            b: 1.0 / 6.0,
            d: 7.0 / 60.0,
            m: 1,
            p: 0.948693343972442,
            deltas: vec![0.2031878699799799],
        },
        trials: 200_000,
        seed: 2024,
        workers: 1,
        max_writes: DEFAULT_MAX_WRITES,
        state: StateSpec::Random,
    };

    let sequential = run_experiment(&config).unwrap();
    let parallel = run_experiment(&ExperimentConfig {
        workers: 8,
        ..config
    })
    .unwrap();

    println!("sequential ({:?}):\n{sequential}", sequential.wall);
    println!("8 workers ({:?}):\n{parallel}", parallel.wall);

    let a = sequential.to_csv();
    let b = parallel.to_csv();
    assert_eq!(a, b);
    println!("CSV reports are byte-identical:\n\n{a}");
}
