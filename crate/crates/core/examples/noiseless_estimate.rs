// Build the preamble, rotate it by a known CFO and run every estimator.
//
//     cargo run --example noiseless_estimate -- 10.1

use crt_cfo::{apply_channel, build_preamble, estimate, ChannelParams, EstimatorConfig, Method};
use crt_cfo::{ModuliSet, WaveformSpec};

fn main() {
    let eps: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10.1);

    let mset = ModuliSet::new(&[3, 5, 7], 2).unwrap();
    let spec = WaveformSpec::new(64, 1.0 / 15.36e6, mset, 1).unwrap();
    let wave = build_preamble(&spec).unwrap();
    println!(
        "preamble: {} samples, segments {:?}",
        wave.samples().len(),
        wave.layout()
    );

    let buf = apply_channel(&wave, &ChannelParams::noiseless(eps), &spec, 0);
    for method in Method::ALL {
        let est = estimate(&buf, &EstimatorConfig::new(spec.clone(), method)).unwrap();
        println!(
            "{:<16} eps_N = {:>10.6}  (unambiguous width {:.3})",
            method, est.eps_n, est.range
        );
    }
}
