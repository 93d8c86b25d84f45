//! Solve the optimal switching thresholds for the exterior regions and
//! show what each one buys: the expected write count at the solved
//! threshold versus the never-switch-early policy (delta = 0).
//!
//!     cargo run --example delta_table

use rewritable::c2::{expected_writes_exterior, solve_delta};

fn main() {
    let (a, b) = (1.0 / 3.0, 1.0 / 6.0);
    let m = 8;
    println!("exterior write costs at a = 1/3, B = 1/6, {m} region pairs\n");
    println!(
        "{:>3}  {:>8}  {:>12}  {:>12}  {:>8}",
        "i", "delta_i", "E[writes]@0", "E[writes]@d", "saved"
    );
    for i in 1..=m {
        let d = solve_delta(i, 1e-12).unwrap();
        let at_zero = expected_writes_exterior(a, b, m, i, 0.0).unwrap();
        let at_opt = expected_writes_exterior(a, b, m, i, d).unwrap();
        println!(
            "{i:>3}  {d:>8.4}  {at_zero:>12.4}  {at_opt:>12.4}  {:>7.2}%",
            (at_zero - at_opt) / at_zero * 100.0
        );
    }
    println!("\nThe threshold solves a stationarity equation; it shrinks with");
    println!("the region index because outer regions are cheaper to abandon.");
}
