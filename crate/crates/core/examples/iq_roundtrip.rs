// Write a synthesized capture to disk in the raw IQ format, read it back and
// estimate its CFO.
//
//     cargo run --example iq_roundtrip

use crt_cfo::io::{read_iq_file, write_iq_file};
use crt_cfo::signal::Snr;
use crt_cfo::{apply_channel, build_preamble, estimate, ChannelParams, EstimatorConfig, IqBuffer};
use crt_cfo::{Method, RunConfig};

fn main() {
    let cfg = RunConfig::minimal(64, &[3, 5, 7]);
    let spec = cfg.waveform().unwrap();
    let wave = build_preamble(&spec).unwrap();
    let ch = ChannelParams::new(-17.3, Snr::Db(15.0), 1.0).unwrap();
    let rx = apply_channel(&wave, &ch, &spec, 42);

    let path = std::env::temp_dir().join(format!("crt_cfo_capture_{}.iq", std::process::id()));
    write_iq_file(&path, rx.samples()).unwrap();
    let samples = read_iq_file(&path).unwrap();
    std::fs::remove_file(&path).ok();
    println!("{} samples ({} bytes)", samples.len(), samples.len() * 16);

    let buf = IqBuffer::for_spec(samples, &spec).unwrap();
    let est = estimate(&buf, &EstimatorConfig::new(spec, Method::Ccmle)).unwrap();
    println!("true eps_N = -17.3, estimated {:.4}", est.eps_n);
    for (i, iv) in est.per_interval.iter().enumerate() {
        println!(
            "  interval {i}: remainder {:.4}, model variance {:.3e}",
            iv.remainder, iv.variance
        );
    }
}
