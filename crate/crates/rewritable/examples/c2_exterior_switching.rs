//! The exterior regions of the interior/exterior code need a switching
//! policy: write one rail until the outputs reveal the region is out of
//! reach, then commit to the other rail. This traces single episodes,
//! shows the per-offset cost split, and checks the simulated average
//! against the closed form at the solved threshold.
//!
//!     cargo run --example c2_exterior_switching

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rewritable::c2::{
    c2_encode_exterior, expected_writes_exterior, per_state_expected_writes, solve_delta,
    C2Layout, SwitchingPolicy,
};
use rewritable::channel::CellState;

fn main() {
    let (a, b, m) = (1.0 / 3.0, 1.0 / 6.0, 1u32);
    let layout = C2Layout::new(a, b, 0.1, m).unwrap();
    let delta = solve_delta(1, 1e-12).unwrap();

    println!("per-offset expected writes for exterior region 1 (m = 1):\n");
    println!("{:>8}  {:>12}  {:>12}", "offset", "delta = 0", "delta = opt");
    for s in [0.0, 0.04, 0.08, 0.12, 0.16] {
        let at_zero = per_state_expected_writes(a, b, m, 1, 0.0, s).unwrap();
        let at_opt = per_state_expected_writes(a, b, m, 1, delta, s).unwrap();
        println!("{s:>8.3}  {at_zero:>12.4}  {at_opt:>12.4}");
    }
    println!(
        "\nOffsets below B/2 leave the region two-sided (cost 4a/B = {};",
        4.0 * a / b
    );
    println!(
        "above B/2 one rail suffices (cost 2a/B = {}). The threshold",
        2.0 * a / b
    );
    println!("delta_1 = {delta:.4} trims the worst offsets near the boundary.\n");

    for (label, policy) in [
        ("delta = 0  ", SwitchingPolicy::zeros(m)),
        ("delta = opt", SwitchingPolicy::optimal(m).unwrap()),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let episodes = 200_000u32;
        let mut total = 0u64;
        for _ in 0..episodes {
            let s = rand::Rng::gen_range(&mut rng, 0.0..b);
            let trace = c2_encode_exterior(
                &layout,
                &policy,
                1,
                CellState { s },
                &mut rng,
                1_000_000,
            )
            .unwrap();
            total += trace.tau();
        }
        let d = policy.delta(1).unwrap();
        let closed = expected_writes_exterior(a, b, m, 1, d).unwrap();
        println!(
            "{label}: simulated {:.4} writes/cell over {episodes} episodes, closed form {closed:.4}",
            total as f64 / episodes as f64
        );
    }
}
