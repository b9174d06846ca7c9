use crt_cfo::signal::{self, SegmentOrder};
use crt_cfo::{apply_channel, build_preamble, estimate, ChannelParams, EstimatorConfig, Method};
use crt_cfo::{ModuliSet, Snr, WaveformSpec};
use proptest::prelude::*;

fn spec(root: u64, order: SegmentOrder) -> WaveformSpec {
    let m = ModuliSet::new(&[3, 5, 7], 2).unwrap();
    WaveformSpec::with_order(64, 1.0 / 15.36e6, m, root, order).unwrap()
}

fn ccmle(spec: &WaveformSpec, ch: &ChannelParams, seed: u64) -> f64 {
    let wave = build_preamble(spec).unwrap();
    let buf = apply_channel(&wave, ch, spec, seed);
    estimate(&buf, &EstimatorConfig::new(spec.clone(), Method::Ccmle))
        .unwrap()
        .eps_n
}

fn gap(a: f64, b: f64) -> f64 {
    signal::wrap_to_symmetric(a - b, 64.0).abs()
}

proptest! {
    #[test]
    fn channel_phase_does_not_matter(eps in -32.0f64..32.0, phase in 0.0f64..std::f64::consts::TAU) {
        let sp = spec(1, SegmentOrder::Descending);
        let ch = ChannelParams::new(eps, Snr::Noiseless, phase).unwrap();
        prop_assert!(gap(ccmle(&sp, &ch, 0), eps) < 1e-9);
    }

    #[test]
    fn zc_root_and_order_do_not_matter(
        eps in -32.0f64..32.0,
        root in proptest::sample::select(vec![1u64, 2, 4, 8, 11, 13, 16, 17]),
        ascending in any::<bool>(),
    ) {
        let order = if ascending { SegmentOrder::Ascending } else { SegmentOrder::Descending };
        let sp = spec(root, order);
        prop_assert!(gap(ccmle(&sp, &ChannelParams::noiseless(eps), 0), eps) < 1e-9);
    }

    #[test]
    fn cfo_aliases_with_period_n(eps in -32.0f64..32.0, k in -3i32..=3) {
        let sp = spec(1, SegmentOrder::Descending);
        let wave = build_preamble(&sp).unwrap();
        let a = apply_channel(&wave, &ChannelParams::noiseless(eps), &sp, 0);
        let b = apply_channel(&wave, &ChannelParams::noiseless(eps + 64.0 * k as f64), &sp, 0);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn noisy_estimates_are_seed_deterministic(seed in any::<u64>(), eps in -32.0f64..32.0) {
        let sp = spec(1, SegmentOrder::Descending);
        let ch = ChannelParams::new(eps, Snr::Db(5.0), 0.3).unwrap();
        prop_assert_eq!(ccmle(&sp, &ch, seed).to_bits(), ccmle(&sp, &ch, seed).to_bits());
    }
}

#[test]
fn correlation_magnitude_matches_segment_energy() {
    let sp = spec(1, SegmentOrder::Descending);
    let wave = build_preamble(&sp).unwrap();
    let buf = apply_channel(&wave, &ChannelParams::noiseless(3.3), &sp, 0);
    for (i, &l) in sp.mset().sample_intervals().iter().enumerate() {
        let p = signal::correlate(&buf, i, &sp).unwrap();
        assert!((p.norm() - l as f64).abs() < 1e-9);
    }
}
