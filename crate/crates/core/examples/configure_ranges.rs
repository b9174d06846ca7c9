// Rank co-prime range tuples for a DFT size by (Σ_L, η_th).
//
//     cargo run --example configure_ranges -- 512 4

use crt_cfo::theory;

fn main() {
    let mut args = std::env::args().skip(1);
    let n_fft: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(512);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);

    let ranked = match theory::config_search(n_fft, &[k]) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    println!("{} candidates for N = {n_fft}, K = {k}", ranked.len());
    for c in ranked.iter().take(8) {
        println!(
            "layer {}  {:<16} Sigma_L = {:.3e}  eta_th = {:.2} dB{}",
            c.pareto_rank,
            format!("{:?}", c.mset.gammas()),
            c.model.sigma_l,
            c.threshold.eta_th_db,
            if c.consecutive_primes {
                "  (consecutive primes)"
            } else {
                ""
            }
        );
    }

    for (i, c) in ranked.iter().enumerate().skip(8) {
        if c.consecutive_primes {
            println!(
                "#{:<3} {:<16} Sigma_L = {:.3e}  eta_th = {:.2} dB  (consecutive primes)",
                i + 1,
                format!("{:?}", c.mset.gammas()),
                c.model.sigma_l,
                c.threshold.eta_th_db
            );
        }
    }

    if n_fft == 512 && k == 4 {
        let alt = theory::evaluate_candidate(&[2, 5, 7, 13], n_fft).unwrap();
        println!(
            "queried (2, 5, 7, 13): Sigma_L = {:.3e}, eta_th = {:.2} dB",
            alt.model.sigma_l, alt.threshold.eta_th_db
        );
    }
}
