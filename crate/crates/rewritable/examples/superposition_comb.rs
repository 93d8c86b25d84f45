//! The comb partition turns leftover rewrite budget into extra bits on
//! the Gaussian cell: interleave k thin target regions so every label is
//! equally likely no matter the stimulus or the hidden offset. Hitting a
//! uniform target label is then a geometric event with mean k.
//!
//!     cargo run --example superposition_comb

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rewritable::awgn::{
    label_probabilities_analytic, max_label_deviation, simulate_superposition, CombLayout,
};
use rewritable::channel::AwgnChannelParams;

fn main() {
    let params = AwgnChannelParams::new(1.0, 10.0, 100.0).unwrap();
    let k = 4u32;

    println!("label uniformity vs tooth width (k = {k}, write noise N = 1):\n");
    println!("{:>10}  {:>14}", "delta", "max |p - 1/k|");
    let mut delta = 1.0;
    for _ in 0..6 {
        let comb = CombLayout::new(delta, k).unwrap();
        let probs = label_probabilities_analytic(&comb, 0.37, params.n).unwrap();
        println!("{delta:>10.4}  {:>14.3e}", max_label_deviation(&probs));
        delta /= 2.0;
    }

    let (l, kappa, delta) = (2u32, 6u32, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stats = simulate_superposition(&params, l, kappa, delta, 300_000, &mut rng).unwrap();
    println!(
        "\nestimate-then-label at budget {kappa} ({l} probes + comb with {} labels):",
        kappa - l
    );
    println!(
        "  mean writes/cell  {:.4} (se {:.4}), target {kappa}",
        stats.mean_total_writes, stats.stderr_total
    );
    println!(
        "  mean data writes  {:.4}, target {}",
        stats.mean_post_writes,
        kappa - l
    );
    let lo = stats.label_counts.iter().min().unwrap();
    let hi = stats.label_counts.iter().max().unwrap();
    println!("  label counts      {lo}..{hi} across {} labels", stats.label_counts.len());
    println!("  decode errors     {}", stats.decode_errors);
}
