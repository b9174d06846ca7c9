// Fuse noisy per-modulus remainders into one value over the full range.
//
//     cargo run --example reconstruct_remainders

use crt_cfo::crt::{self, ModuliSet, RemainderObservation};

fn main() {
    let mset = ModuliSet::new(&[3, 5, 7], 2).expect("valid ranges");
    println!(
        "M_i = {:?}, L_i = {:?}, range [0, {})",
        mset.scaled_moduli(),
        mset.sample_intervals(),
        mset.full_range()
    );

    // 123.4 reduced modulo 6, 10 and 14, each with a small error; the
    // variances follow 1/L_i³.
    let truth = 123.4;
    let errors = [0.02, -0.05, 0.11];
    let values: Vec<f64> = mset
        .scaled_moduli()
        .iter()
        .zip(errors)
        .map(|(&m, e)| crt::wrap_mod(truth + e, m as f64))
        .collect();
    let variances: Vec<f64> = mset
        .sample_intervals()
        .iter()
        .map(|&l| 1.0 / (l as f64).powi(3))
        .collect();
    let obs = RemainderObservation::new(values.clone(), variances).unwrap();

    let sol = crt::solve_common_remainder(&obs, &mset).unwrap();
    println!("remainders {values:.3?}");
    println!(
        "candidates {:.4?} -> common remainder {:.4}",
        sol.candidates, sol.r_hat
    );

    let mle = crt::reconstruct_mle(&obs, &mset).unwrap();
    let classic = crt::reconstruct_classic(&obs, &mset).unwrap();
    println!("weighted robust CRT: {mle:.4}  (truth {truth})");
    println!("rounding CRT:        {classic:.4}");
}
