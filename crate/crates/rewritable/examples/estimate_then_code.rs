//! Why probing pays on the Gaussian cell: each probe write sharpens the
//! offset estimate, shrinking the effective noise the data write faces,
//! but burns budget that could have bought rewrite freedom. Shows the
//! estimator at work on one cell and the budget split that the staged
//! bound resolves.
//!
//!     cargo run --example estimate_then_code

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rewritable::awgn::{gaussian_gp_rate, mmse_estimate, single_write_rate};
use rewritable::channel::{AwgnChannelParams, Channel};

fn main() {
    let params = AwgnChannelParams::new(1.0, 10.0, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let state = params.sample_state(&mut rng);
    println!("one cell, true offset s = {:.4}\n", state.s);

    println!(
        "{:>7}  {:>10}  {:>10}  {:>10}",
        "probes", "estimate", "N_eff", "rate_bits"
    );
    let mut outputs = Vec::new();
    for l in 0..=5u32 {
        let est = mmse_estimate(&params, &outputs, 0.0);
        let rate = gaussian_gp_rate(params.p, est.n_eff, est.sigma2_sl).unwrap();
        println!(
            "{l:>7}  {:>10.4}  {:>10.4}  {:>10.4}",
            est.s_hat, est.n_eff, rate
        );
        outputs.push(params.write_once(state, 0.0, &mut rng));
    }
    println!(
        "\nN_eff falls from N + sigma_s2 = {} toward N = {}; the precoding",
        params.n + params.sigma_s2,
        params.n
    );
    println!("rate is 1/2 log2(1 + P/N_eff) whatever the estimated part is.\n");

    let kappa = 6.0;
    println!("budget split at kappa = {kappa}: probe l, rewrite among kappa - l labels\n");
    println!(
        "{:>7}  {:>10}  {:>10}  {:>10}",
        "l", "code bits", "comb bits", "total"
    );
    for l in 0..kappa as u32 {
        let code = single_write_rate(params.p, params.n, params.sigma_s2, l).unwrap();
        let comb = (kappa - l as f64).log2();
        println!("{l:>7}  {code:>10.4}  {comb:>10.4}  {:>10.4}", code + comb);
    }
}
