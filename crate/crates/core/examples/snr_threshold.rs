// Closed-form MSE and SNR threshold of a range configuration.
//
//     cargo run --example snr_threshold

use crt_cfo::theory::{self, PerformanceModel};
use crt_cfo::ModuliSet;

fn main() {
    let mset = ModuliSet::new(&[3, 5, 7], 2).unwrap();

    println!("{:>8}  {:>8}  {:>9}", "delta", "x_delta", "eta_th_dB");
    for delta in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let t = theory::snr_threshold(&mset, delta).unwrap();
        println!(
            "{:>8.0e}  {:>8.4}  {:>9.3}",
            t.delta, t.x_delta, t.eta_th_db
        );
    }

    // above the threshold the estimator tracks Δ_MSE
    for snr_db in [10.0, 14.0, 20.0] {
        let m = PerformanceModel::new(&mset, 64, 10f64.powf(snr_db / 10.0)).unwrap();
        let best_single = m.sigma_sq.iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "{snr_db:>4} dB: delta_mse = {:.3e}, best single interval = {:.3e} (in eps_M units)",
            m.delta_mse, best_single
        );
    }
}
