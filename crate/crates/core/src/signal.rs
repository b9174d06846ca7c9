//! Zadoff-Chu training preamble, the CFO-rotating AWGN channel and the
//! lag-`L` correlator.
//!
//! The preamble carries one segment per sample interval `L_i`: a ZC block of
//! length `L_i` sent twice back to back. Segments are concatenated and noise
//! on each segment is drawn from its own ChaCha stream, keyed by the trial
//! seed and the segment index, so segments never share noise samples.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::crt::{gcd, ModuliSet};
use crate::error::{Error, Result};

/// Order in which the `K` segments are laid out in the preamble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentOrder {
    /// Longest interval first.
    #[default]
    Descending,
    Ascending,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveformSpec {
    n_fft: usize,
    sample_period: f64,
    mset: ModuliSet,
    zc_root: u64,
    order: SegmentOrder,
}

impl WaveformSpec {
    pub fn new(n_fft: usize, sample_period: f64, mset: ModuliSet, zc_root: u64) -> Result<Self> {
        Self::with_order(
            n_fft,
            sample_period,
            mset,
            zc_root,
            SegmentOrder::Descending,
        )
    }

    pub fn with_order(
        n_fft: usize,
        sample_period: f64,
        mset: ModuliSet,
        zc_root: u64,
        order: SegmentOrder,
    ) -> Result<Self> {
        if n_fft < 2 {
            return Err(Error::InvalidWaveform(format!(
                "DFT size must be at least 2, got {n_fft}"
            )));
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        let l1 = mset.sample_intervals()[0];
        if l1 >= n_fft as u64 {
            return Err(Error::InvalidWaveform(format!(
                "longest sample interval {l1} must be below the DFT size {n_fft}"
            )));
        }
        for &l in mset.sample_intervals() {
            if gcd(zc_root, l) != 1 {
                return Err(Error::InvalidZcRoot {
                    root: zc_root,
                    length: l as usize,
                });
            }
        }
        Ok(Self {
            n_fft,
            sample_period,
            mset,
            zc_root,
            order,
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn mset(&self) -> &ModuliSet {
        &self.mset
    }

    pub fn zc_root(&self) -> u64 {
        self.zc_root
    }

    pub fn order(&self) -> SegmentOrder {
        self.order
    }

    /// Subcarrier spacing `Δf = 1/(N·T_s)` in Hz.
    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / (self.n_fft as f64 * self.sample_period)
    }

    /// Segment offsets in the concatenated preamble, indexed by modulus.
    pub fn layout(&self) -> Vec<SegmentLayout> {
        let intervals = self.mset.sample_intervals();
        let mut positions: Vec<usize> = (0..intervals.len()).collect();
        if self.order == SegmentOrder::Ascending {
            positions.reverse();
        }
        let mut offsets = vec![0; intervals.len()];
        let mut cursor = 0;
        for &i in &positions {
            offsets[i] = cursor;
            cursor += 2 * intervals[i] as usize;
        }
        intervals
            .iter()
            .zip(offsets)
            .map(|(&l, offset)| SegmentLayout {
                offset,
                interval: l as usize,
            })
            .collect()
    }

    /// Total preamble length `2·Σ L_i`.
    pub fn preamble_len(&self) -> usize {
        2 * self.mset.sample_intervals().iter().sum::<u64>() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SegmentLayout {
    pub offset: usize,
    /// Sample interval `L_i`; the segment spans `2·L_i` samples.
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingWaveform {
    samples: Vec<Complex64>,
    layout: Vec<SegmentLayout>,
}

impl TrainingWaveform {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn layout(&self) -> &[SegmentLayout] {
        &self.layout
    }

    /// Samples of the segment built for modulus `index`.
    pub fn segment(&self, index: usize) -> &[Complex64] {
        let s = self.layout[index];
        &self.samples[s.offset..s.offset + 2 * s.interval]
    }

    pub fn num_segments(&self) -> usize {
        self.layout.len()
    }
}

/// Received SNR. `Noiseless` skips noise generation altogether.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Snr {
    Db(f64),
    Noiseless,
}

impl Snr {
    /// Linear SNR `η = 1/σ²`; infinite when noiseless.
    pub fn linear(self) -> f64 {
        match self {
            Snr::Db(db) => 10f64.powf(db / 10.0),
            Snr::Noiseless => f64::INFINITY,
        }
    }

    pub fn db(self) -> Option<f64> {
        match self {
            Snr::Db(db) => Some(db),
            Snr::Noiseless => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// `ε_N`, in units of the subcarrier spacing.
    pub cfo_normalized: f64,
    pub snr: Snr,
    /// Phase of the unit-modulus channel coefficient, radians.
    pub channel_phase: f64,
}

impl ChannelParams {
    pub fn new(cfo_normalized: f64, snr: Snr, channel_phase: f64) -> Result<Self> {
        if let Snr::Db(db) = snr {
            if !db.is_finite() {
                return Err(Error::InvalidSnr(db));
            }
        }
        Ok(Self {
            cfo_normalized,
            snr,
            channel_phase,
        })
    }

    pub fn noiseless(cfo_normalized: f64) -> Self {
        Self {
            cfo_normalized,
            snr: Snr::Noiseless,
            channel_phase: 0.0,
        }
    }
}

/// Complex baseband samples. `origin` is the global index of the first
/// sample within the preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    origin: usize,
}

impl IqBuffer {
    /// Wraps samples that claim to carry the preamble of `spec`.
    pub fn for_spec(samples: Vec<Complex64>, spec: &WaveformSpec) -> Result<Self> {
        if samples.len() != spec.preamble_len() {
            return Err(Error::LengthMismatch {
                what: "preamble samples",
                expected: spec.preamble_len(),
                actual: samples.len(),
            });
        }
        Ok(Self { samples, origin: 0 })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

/// Zadoff-Chu sequence `exp(−jπ·u·n·(n + c)/L)` with `c = L mod 2`.
pub fn zc_sequence(length: usize, root: u64) -> Result<Vec<Complex64>> {
    if length == 0 || gcd(root, length as u64) != 1 {
        return Err(Error::InvalidZcRoot { root, length });
    }
    let len = length as u128;
    let cf = len % 2;
    let period = 2 * len;
    let u = u128::from(root) % period;
    Ok((0..len)
        .map(|n| {
            // exponent reduced modulo 2L keeps the phase argument small
            let k = u * (n * (n + cf) % period) % period;
            Complex64::from_polar(1.0, -PI * k as f64 / length as f64)
        })
        .collect())
}

pub fn build_preamble(spec: &WaveformSpec) -> Result<TrainingWaveform> {
    let layout = spec.layout();
    let mut samples = vec![Complex64::new(0.0, 0.0); spec.preamble_len()];
    for seg in &layout {
        let block = zc_sequence(seg.interval, spec.zc_root())?;
        let dst = &mut samples[seg.offset..seg.offset + 2 * seg.interval];
        dst[..seg.interval].copy_from_slice(&block);
        dst[seg.interval..].copy_from_slice(&block);
    }
    Ok(TrainingWaveform { samples, layout })
}

/// Noise stream for one segment of one trial.
pub(crate) fn segment_rng(seed: u64, segment: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(segment as u64);
    rng
}

/// `r(n) = e^{jφ}·s(n)·e^{j2π·ε_N·n/N} + ω(n)` with circular Gaussian noise of
/// variance `1/η` and `n` the global preamble index.
pub fn apply_channel(
    wave: &TrainingWaveform,
    ch: &ChannelParams,
    spec: &WaveformSpec,
    noise_seed: u64,
) -> IqBuffer {
    let n_fft = spec.n_fft() as f64;
    let h = Complex64::from_polar(1.0, ch.channel_phase);
    let mut samples: Vec<Complex64> = wave
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let cycles = (ch.cfo_normalized * n as f64 / n_fft).rem_euclid(1.0);
            h * s * Complex64::from_polar(1.0, TAU * cycles)
        })
        .collect();

    if let Snr::Db(_) = ch.snr {
        let std = (0.5 / ch.snr.linear()).sqrt();
        for (index, seg) in wave.layout().iter().enumerate() {
            let mut rng = segment_rng(noise_seed, index);
            for x in &mut samples[seg.offset..seg.offset + 2 * seg.interval] {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *x += Complex64::new(re * std, im * std);
            }
        }
    }
    IqBuffer { samples, origin: 0 }
}

/// `P_{L_i} = Σ_{m<L_i} r*(m)·r(m + L_i)` over segment `segment_index`.
pub fn correlate(buf: &IqBuffer, segment_index: usize, spec: &WaveformSpec) -> Result<Complex64> {
    let layout = spec.layout();
    let seg = layout.get(segment_index).ok_or(Error::SegmentOutOfRange {
        index: segment_index,
        count: layout.len(),
    })?;
    let end = seg.offset + 2 * seg.interval;
    if buf.len() < end {
        return Err(Error::LengthMismatch {
            what: "preamble samples",
            expected: spec.preamble_len(),
            actual: buf.len(),
        });
    }
    let samples = &buf.samples()[seg.offset..end];
    let (first, second) = samples.split_at(seg.interval);
    Ok(first.iter().zip(second).map(|(a, b)| a.conj() * b).sum())
}

/// `(numerator/(2π·interval))·arg(p)` with the phase taken in `[0, 2π)`, so
/// the estimate lies in `[0, numerator/interval)`.
pub fn estimate_single_interval(p: Complex64, numerator: f64, interval: u64) -> Result<f64> {
    if interval == 0 {
        return Err(Error::OutOfDomain {
            name: "interval",
            value: 0.0,
            range: "(0, inf)",
        });
    }
    if p.norm_sqr() == 0.0 || !p.is_finite() {
        return Err(Error::UndefinedPhase);
    }
    let mut phase = p.arg();
    if phase < 0.0 {
        phase += TAU;
    }
    if phase >= TAU {
        phase = 0.0;
    }
    Ok(numerator / (TAU * interval as f64) * phase)
}

/// Maps `value` into `[−width/2, width/2)`.
pub fn wrap_to_symmetric(value: f64, width: f64) -> f64 {
    let half = width / 2.0;
    if (-half..half).contains(&value) {
        return value;
    }
    let mut r = (value + half).rem_euclid(width);
    if r >= width {
        r = 0.0;
    }
    r - half
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, gammas: &[u64]) -> WaveformSpec {
        WaveformSpec::new(n, 1e-6, ModuliSet::new(gammas, 2).unwrap(), 1).unwrap()
    }

    #[test]
    fn zc_is_unit_modulus() {
        for len in [1, 2, 15, 21, 35, 64, 139] {
            for s in zc_sequence(len, 1).unwrap() {
                assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(zc_sequence(1, 1).unwrap().len(), 1);
    }

    #[test]
    fn zc_rejects_shared_factor() {
        assert!(matches!(
            zc_sequence(15, 5),
            Err(Error::InvalidZcRoot {
                root: 5,
                length: 15
            })
        ));
        assert!(zc_sequence(0, 1).is_err());
    }

    #[test]
    fn zc_prime_length_has_ideal_autocorrelation() {
        for (len, root) in [(31usize, 1u64), (37, 5), (139, 25)] {
            let s = zc_sequence(len, root).unwrap();
            for lag in 1..len {
                let acc: Complex64 = (0..len).map(|n| s[n].conj() * s[(n + lag) % len]).sum();
                assert!(acc.norm() < len as f64 * 1e-9, "len {len} lag {lag}: {acc}");
            }
        }
    }

    #[test]
    fn preamble_layout() {
        let wave = build_preamble(&spec(64, &[3, 5, 7])).unwrap();
        assert_eq!(wave.samples().len(), 142);
        let lens: Vec<usize> = (0..3).map(|i| wave.segment(i).len()).collect();
        assert_eq!(lens, vec![70, 42, 30]);
        for i in 0..3 {
            let seg = wave.segment(i);
            let (a, b) = seg.split_at(seg.len() / 2);
            assert_eq!(a, b);
        }
        for s in wave.samples() {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }

        let toy = build_preamble(&spec(8, &[2, 3])).unwrap();
        assert_eq!(toy.segment(0).len(), 6);
        assert_eq!(toy.segment(1).len(), 4);
    }

    #[test]
    fn ascending_order_reverses_offsets() {
        let m = ModuliSet::new(&[3, 5, 7], 2).unwrap();
        let asc = WaveformSpec::with_order(64, 1e-6, m, 1, SegmentOrder::Ascending).unwrap();
        let offsets: Vec<usize> = asc.layout().iter().map(|s| s.offset).collect();
        assert_eq!(offsets, vec![72, 30, 0]);
    }

    #[test]
    fn spec_rejects_long_interval() {
        let m = ModuliSet::new(&[3, 5, 7], 2).unwrap();
        assert!(WaveformSpec::new(35, 1e-6, m.clone(), 1).is_err());
        assert!(WaveformSpec::new(64, 1e-6, m.clone(), 3).is_err());
        assert!(WaveformSpec::new(64, 0.0, m, 1).is_err());
    }

    #[test]
    fn noiseless_channel_is_identity_without_cfo() {
        let sp = spec(64, &[3, 5, 7]);
        let wave = build_preamble(&sp).unwrap();
        let buf = apply_channel(&wave, &ChannelParams::noiseless(0.0), &sp, 7);
        assert_eq!(buf.samples(), wave.samples());
    }

    #[test]
    fn quarter_band_cfo_advances_quarter_turn() {
        let sp = spec(64, &[3, 5, 7]);
        let wave = build_preamble(&sp).unwrap();
        let buf = apply_channel(&wave, &ChannelParams::noiseless(16.0), &sp, 7);
        for n in 0..buf.len() - 1 {
            let step = (buf.samples()[n + 1] / wave.samples()[n + 1])
                / (buf.samples()[n] / wave.samples()[n]);
            assert!((step - Complex64::new(0.0, 1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn correlation_noiseless() {
        let sp = spec(64, &[3, 5, 7]);
        let wave = build_preamble(&sp).unwrap();
        let buf = apply_channel(&wave, &ChannelParams::noiseless(0.0), &sp, 0);
        for (i, &l) in sp.mset().sample_intervals().iter().enumerate() {
            let p = correlate(&buf, i, &sp).unwrap();
            assert!((p - Complex64::new(l as f64, 0.0)).norm() < 1e-9);
        }

        let eps = 3.7;
        let ch = ChannelParams {
            cfo_normalized: eps,
            snr: Snr::Noiseless,
            channel_phase: 1.3,
        };
        let buf = apply_channel(&wave, &ch, &sp, 0);
        for (i, &l) in sp.mset().sample_intervals().iter().enumerate() {
            let p = correlate(&buf, i, &sp).unwrap();
            let expected = Complex64::from_polar(l as f64, TAU * l as f64 * eps / 64.0);
            assert!((p - expected).norm() < 1e-9);
        }
        assert!(matches!(
            correlate(&buf, 3, &sp),
            Err(Error::SegmentOutOfRange { index: 3, count: 3 })
        ));
    }

    #[test]
    fn single_interval_examples() {
        assert_eq!(
            estimate_single_interval(Complex64::new(5.0, 0.0), 210.0, 35).unwrap(),
            0.0
        );
        let p = Complex64::from_polar(35.0, PI / 2.0);
        assert!((estimate_single_interval(p, 210.0, 35).unwrap() - 1.5).abs() < 1e-12);
        let p = Complex64::from_polar(1.0, -1e-9);
        let e = estimate_single_interval(p, 210.0, 35).unwrap();
        assert!(e < 6.0 && e > 6.0 - 1e-6);
        assert!(matches!(
            estimate_single_interval(Complex64::new(0.0, 0.0), 210.0, 35),
            Err(Error::UndefinedPhase)
        ));
    }

    #[test]
    fn symmetric_wrap_examples() {
        assert_eq!(wrap_to_symmetric(0.3, 64.0), 0.3);
        assert_eq!(wrap_to_symmetric(63.0, 64.0), -1.0);
        assert_eq!(wrap_to_symmetric(32.0, 64.0), -32.0);
        assert_eq!(wrap_to_symmetric(-32.0, 64.0), -32.0);
    }

    #[test]
    fn noise_variance_matches_snr() {
        // 10^6 complex draws spread over many seeds
        let sp = spec(64, &[3, 5, 7]);
        let wave = build_preamble(&sp).unwrap();
        let snr_db = 3.0;
        let ch = ChannelParams::new(0.0, Snr::Db(snr_db), 0.0).unwrap();
        let mut acc = 0.0;
        let mut count = 0usize;
        let mut seed = 0;
        while count < 1_000_000 {
            let buf = apply_channel(&wave, &ch, &sp, seed);
            for (r, s) in buf.samples().iter().zip(wave.samples()) {
                acc += (r - s).norm_sqr();
                count += 1;
            }
            seed += 1;
        }
        let var = acc / count as f64;
        let expected = 1.0 / 10f64.powf(snr_db / 10.0);
        assert!((var / expected - 1.0).abs() < 0.01, "{var} vs {expected}");
    }

    #[test]
    fn noise_is_seeded() {
        let sp = spec(64, &[3, 5, 7]);
        let wave = build_preamble(&sp).unwrap();
        let ch = ChannelParams::new(1.0, Snr::Db(5.0), 0.0).unwrap();
        assert_eq!(
            apply_channel(&wave, &ch, &sp, 11),
            apply_channel(&wave, &ch, &sp, 11)
        );
        assert_ne!(
            apply_channel(&wave, &ch, &sp, 11),
            apply_channel(&wave, &ch, &sp, 12)
        );
    }
}
