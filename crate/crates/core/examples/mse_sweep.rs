// A small seeded Monte-Carlo sweep of all four estimators.
//
//     cargo run --release --example mse_sweep -- 2000

use crt_cfo::{
    run_sweep, CfoMode, EstimatorConfig, Method, ModuliSet, Snr, SweepSpec, WaveformSpec,
};

fn main() {
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);

    let mset = ModuliSet::new(&[3, 5, 7], 2).unwrap();
    let wave = WaveformSpec::new(64, 1.0 / 15.36e6, mset, 1).unwrap();
    let spec = SweepSpec {
        configs: Method::ALL
            .iter()
            .map(|&m| EstimatorConfig::new(wave.clone(), m))
            .collect(),
        snr_grid: [4.0, 8.0, 12.0].map(Snr::Db).to_vec(),
        trials_per_point: trials,
        cfo_mode: CfoMode::UniformSymmetric,
        master_seed: 7,
    };
    let result = run_sweep(&spec).unwrap();
    print!("{}", result.to_csv());
}
