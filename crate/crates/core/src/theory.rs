//! Closed-form performance model of the CRT-based ML estimator.
//!
//! With `η` the linear SNR and `L_i` the sample intervals:
//!
//! * per-interval error variance (in `(MΓT_s)⁻¹` units)
//!   `σ_i² = M²Γ²/(4π²·L_i³·η)`;
//! * ML mean squared error `Δ_MSE(M) = (Σ 1/σ_i²)⁻¹`, which is also the CRB;
//!   in subcarrier units `Δ_MSE = N²/(4π²·η·Σ L_i³)`, independent of `M`;
//! * SNR threshold above which the estimator stays on the CRB with
//!   probability at least `1 − δ`: `η_th = Γ²·x_δ²·ξ*/π²` where
//!   `2·Q(x_δ) = δ` and `ξ* = 1/L_K³ + 1/Σ_{j≠K} L_j³` is the largest value
//!   of `ξ(S) = 1/Σ_S L³ + 1/Σ_{S̄} L³` over non-trivial splits `S`.
//!
//! The tail probability behind the threshold keeps only the leading
//! `2·Q(M/(2σ_Ψ))` term of the wrapped-normal series.

use std::f64::consts::PI;

use libm::erfc;
use serde::Serialize;

use crate::crt::{gcd, mle_weights, ModuliSet};
use crate::error::{Error, Result};

/// Gaussian tail probability `Q(t) = P(Z > t)`.
pub fn q_function(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// Solves `Q(x) = p` for `p ∈ (0, 0.5]` by safeguarded Newton iteration.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::OutOfDomain {
            name: "tail probability",
            value: p,
            range: "(0, 0.5]",
        });
    }
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    let mut x = (-2.0 * (2.0 * p).ln()).sqrt().min(hi);
    for _ in 0..200 {
        let q = q_function(x);
        let f = q - p;
        if f.abs() <= 1e-14 * p {
            break;
        }
        // Q is decreasing
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let newton = x + f / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn check_snr(snr_linear: f64) -> Result<()> {
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::InvalidSnr(snr_linear));
    }
    Ok(())
}

/// `σ_i² = M²Γ²/(4π²·L_i³·η)` for every interval.
pub fn variance_model(mset: &ModuliSet, snr_linear: f64) -> Result<Vec<f64>> {
    check_snr(snr_linear)?;
    let scale = mset.full_range().powi(2) / (4.0 * PI * PI * snr_linear);
    Ok(mset
        .interval_cubes()
        .into_iter()
        .map(|c| scale / c)
        .collect())
}

/// `Δ_MSE(M) = (Σ 1/σ_i²)⁻¹`, in `(MΓT_s)⁻¹` units.
pub fn delta_mse_m(mset: &ModuliSet, snr_linear: f64) -> Result<f64> {
    let vars = variance_model(mset, snr_linear)?;
    Ok(1.0 / vars.iter().map(|v| 1.0 / v).sum::<f64>())
}

/// `Δ_MSE = N²/(4π²·η·Σ L_i³)`, in subcarrier-spacing units.
pub fn delta_mse(mset: &ModuliSet, n_fft: usize, snr_linear: f64) -> Result<f64> {
    check_snr(snr_linear)?;
    let n = n_fft as f64;
    Ok(n * n / (4.0 * PI * PI * snr_linear * sigma_l(mset)))
}

/// `Σ_L = Σ L_i³`.
pub fn sigma_l(mset: &ModuliSet) -> f64 {
    mset.interval_cubes().iter().sum()
}

/// `ξ(S)` for the subset encoded by `subset_mask` (bit `i` set means
/// interval `i` belongs to `S`).
pub fn xi_psi_subset(l_cubes: &[f64], subset_mask: u64) -> f64 {
    let (mut inside, mut outside) = (0.0, 0.0);
    for (i, &c) in l_cubes.iter().enumerate() {
        if subset_mask >> i & 1 == 1 {
            inside += c;
        } else {
            outside += c;
        }
    }
    if inside == 0.0 || outside == 0.0 {
        1.0 / (inside + outside)
    } else {
        1.0 / inside + 1.0 / outside
    }
}

/// `ξ* = 1/L_K³ + 1/Σ_{j≠K} L_j³` for cubes of strictly decreasing intervals.
pub fn xi_psi_max_from_cubes(l_cubes: &[f64]) -> f64 {
    let (last, rest) = l_cubes.split_last().expect("at least two intervals");
    1.0 / last + 1.0 / rest.iter().sum::<f64>()
}

pub fn xi_psi_max(mset: &ModuliSet) -> f64 {
    xi_psi_max_from_cubes(&mset.interval_cubes())
}

/// `Γ²·ξ* ≈ Γ_K²/(Γ_1·…·Γ_{K−1})`.
pub fn approx_gamma_xi(mset: &ModuliSet) -> f64 {
    let (last, rest) = mset.gammas().split_last().expect("at least two ranges");
    (*last as f64).powi(2) / rest.iter().map(|&g| g as f64).product::<f64>()
}

/// Everything the closed-form model says about one configuration at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceModel {
    pub mset: ModuliSet,
    pub n_fft: usize,
    pub snr_linear: f64,
    pub sigma_sq: Vec<f64>,
    pub weights: Vec<f64>,
    pub delta_mse_m: f64,
    pub delta_mse: f64,
    pub xi_star: f64,
    pub sigma_l: f64,
}

impl PerformanceModel {
    pub fn new(mset: &ModuliSet, n_fft: usize, snr_linear: f64) -> Result<Self> {
        let sigma_sq = variance_model(mset, snr_linear)?;
        let weights = mle_weights(&sigma_sq)?;
        let delta_mse_m = 1.0 / sigma_sq.iter().map(|v| 1.0 / v).sum::<f64>();
        let scale = n_fft as f64 / mset.full_range();
        Ok(Self {
            mset: mset.clone(),
            n_fft,
            snr_linear,
            sigma_sq,
            weights,
            delta_mse_m,
            delta_mse: scale * scale * delta_mse_m,
            xi_star: xi_psi_max(mset),
            sigma_l: sigma_l(mset),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdQuery {
    pub delta: f64,
    pub x_delta: f64,
    pub eta_th_linear: f64,
    pub eta_th_db: f64,
}

/// SNR threshold for failure probability `δ`.
pub fn snr_threshold(mset: &ModuliSet, delta: f64) -> Result<ThresholdQuery> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::OutOfDomain {
            name: "delta",
            value: delta,
            range: "(0, 0.5)",
        });
    }
    let x_delta = q_inverse(delta / 2.0)?;
    let gamma = mset.gamma_prod() as f64;
    let eta = gamma * gamma * x_delta * x_delta * xi_psi_max(mset) / (PI * PI);
    Ok(ThresholdQuery {
        delta,
        x_delta,
        eta_th_linear: eta,
        eta_th_db: 10.0 * eta.log10(),
    })
}

/// One row of the configuration search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigCandidate {
    pub mset: ModuliSet,
    /// Closed-form model evaluated at the threshold SNR.
    pub model: PerformanceModel,
    pub threshold: ThresholdQuery,
    /// The ranges are `K` consecutive primes.
    pub consecutive_primes: bool,
    /// 1 for configurations no other candidate beats on both `Σ_L` and
    /// `η_th`, 2 for the next layer, and so on.
    pub pareto_rank: usize,
}

/// Failure probability used when ranking configurations.
pub const CONFIG_SEARCH_DELTA: f64 = 1e-6;

/// Enumerates every ascending, pairwise co-prime tuple `Γ_1 < … < Γ_K`
/// (`Γ_1 ≥ 2`, `M = 2`) whose longest interval `Γ/Γ_1` stays below `N`, for
/// each requested `K`.
///
/// Candidates are ordered by Pareto layer over (larger `Σ_L`, lower `η_th`)
/// and then by `η_th`; neither metric is folded into the other.
pub fn config_search(n_fft: usize, k_targets: &[usize]) -> Result<Vec<ConfigCandidate>> {
    if n_fft < 8 {
        return Err(Error::OutOfDomain {
            name: "DFT size",
            value: n_fft as f64,
            range: "[8, inf)",
        });
    }
    let mut tuples = Vec::new();
    for &k in k_targets {
        if k >= 2 {
            enumerate_tuples(n_fft as u64, k, &mut Vec::new(), &mut tuples);
        }
    }
    let mut out = tuples
        .into_iter()
        .map(|g| evaluate_candidate(&g, n_fft))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::NoFeasibleConfiguration {
            n_fft,
            k: k_targets.to_vec(),
        });
    }
    assign_pareto_ranks(&mut out);
    out.sort_by(|a, b| {
        a.pareto_rank
            .cmp(&b.pareto_rank)
            .then(a.threshold.eta_th_db.total_cmp(&b.threshold.eta_th_db))
            .then_with(|| a.mset.gammas().cmp(b.mset.gammas()))
    });
    Ok(out)
}

/// Scores an explicit set of ranges the same way [`config_search`] does.
pub fn evaluate_candidate(gammas: &[u64], n_fft: usize) -> Result<ConfigCandidate> {
    let mset = ModuliSet::new(gammas, 2)?;
    let threshold = snr_threshold(&mset, CONFIG_SEARCH_DELTA)?;
    let model = PerformanceModel::new(&mset, n_fft, threshold.eta_th_linear)?;
    Ok(ConfigCandidate {
        consecutive_primes: is_consecutive_primes(gammas),
        mset,
        model,
        threshold,
        pareto_rank: 0,
    })
}

fn enumerate_tuples(n_fft: u64, k: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    // product of everything after the first range must stay below N
    let tail: u64 = prefix.iter().skip(1).product();
    let remaining = (k - prefix.len()) as u32;
    let start = prefix.last().map_or(2, |&g| g + 1);
    let mut g = start;
    loop {
        let bound = if prefix.is_empty() {
            // the K−1 later ranges all exceed g
            (g + 1).checked_pow(remaining - 1)
        } else {
            tail.checked_mul(g).and_then(|t| {
                (g + 1)
                    .checked_pow(remaining - 1)
                    .and_then(|r| t.checked_mul(r))
            })
        };
        match bound {
            Some(b) if b < n_fft => {}
            _ => break,
        }
        if prefix.iter().all(|&p| gcd(p, g) == 1) {
            prefix.push(g);
            enumerate_tuples(n_fft, k, prefix, out);
            prefix.pop();
        }
        g += 1;
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

fn is_consecutive_primes(gammas: &[u64]) -> bool {
    gammas.iter().all(|&g| is_prime(g))
        && gammas
            .windows(2)
            .all(|w| (w[0] + 1..w[1]).all(|x| !is_prime(x)))
}

fn assign_pareto_ranks(items: &mut [ConfigCandidate]) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .model
            .sigma_l
            .total_cmp(&items[a].model.sigma_l)
            .then(
                items[a]
                    .threshold
                    .eta_th_db
                    .total_cmp(&items[b].threshold.eta_th_db),
            )
    });
    // best η_th seen so far in each layer; increasing with the layer index
    let mut fronts: Vec<f64> = Vec::new();
    for i in order {
        let eta = items[i].threshold.eta_th_db;
        let layer = fronts.partition_point(|&best| best < eta);
        if layer == fronts.len() {
            fronts.push(eta);
        } else {
            fronts[layer] = fronts[layer].min(eta);
        }
        items[i].pareto_rank = layer + 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(g: &[u64]) -> ModuliSet {
        ModuliSet::new(g, 2).unwrap()
    }

    #[test]
    fn variance_examples() {
        let v = variance_model(&set(&[3, 5, 7]), 10.0).unwrap();
        let expected = 4.0 * 11025.0 / (4.0 * PI * PI * 42875.0 * 10.0);
        assert!((v[0] - expected).abs() < 1e-15);
        assert!((v[0] - 2.605e-3).abs() < 1e-6);
        let v2 = variance_model(&set(&[3, 5, 7]), 20.0).unwrap();
        for (a, b) in v.iter().zip(&v2) {
            assert!((a / b - 2.0).abs() < 1e-12);
        }
        assert!(v[0] < v[1] && v[1] < v[2]);
        assert!(variance_model(&set(&[3, 5, 7]), 0.0).is_err());
    }

    #[test]
    fn delta_mse_examples() {
        let d = delta_mse(&set(&[3, 5, 7]), 64, 10.0).unwrap();
        assert!((d - 1.869e-4).abs() < 1e-7, "{d}");
        for m in [2, 3, 5] {
            let ms = ModuliSet::new(&[3, 5, 7], m).unwrap();
            let d_m = delta_mse(&ms, 64, 10.0).unwrap();
            assert!((d_m - d).abs() < 1e-18);
            let model = PerformanceModel::new(&ms, 64, 10.0).unwrap();
            assert!((model.delta_mse / d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_examples() {
        let cubes = set(&[3, 5, 7]).interval_cubes();
        assert!((xi_psi_subset(&cubes, 0) - 1.0 / 55511.0).abs() < 1e-18);
        assert!((xi_psi_subset(&cubes, 0b111) - 1.0 / 55511.0).abs() < 1e-18);
        let s3 = xi_psi_subset(&cubes, 0b100);
        assert!((s3 - (1.0 / 3375.0 + 1.0 / 52136.0)).abs() < 1e-18);
        assert!((s3 - 3.1548e-4).abs() < 1e-8);
        assert_eq!(s3, xi_psi_subset(&cubes, 0b011));
        assert!((xi_psi_max(&set(&[3, 5, 7])) - 3.1548e-4).abs() < 1e-8);
        let x4 = xi_psi_max(&set(&[2, 3, 5, 7]));
        assert!((x4 - (1.0 / 27000.0 + 1.0 / 1574713.0)).abs() < 1e-18);
        assert!((x4 - 3.7672e-5).abs() < 1e-9);
        let (a, b) = (11f64, 7f64);
        assert!(
            (xi_psi_max_from_cubes(&[a.powi(3), b.powi(3)]) - (1.0 / b.powi(3) + 1.0 / a.powi(3)))
                .abs()
                < 1e-18
        );
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_inverse(5e-7).unwrap() - 4.89).abs() < 0.01);
        assert!((q_inverse(5e-3).unwrap() - 2.58).abs() < 0.01);
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(0.6).is_err());
    }

    #[test]
    fn q_inverse_round_trips() {
        let mut p = 0.5;
        while p > 1e-300 {
            let x = q_inverse(p).unwrap();
            assert!((q_function(x) - p).abs() <= 1e-6 * p, "p = {p}");
            p /= 3.7;
        }
    }

    #[test]
    fn threshold_examples() {
        let t = snr_threshold(&set(&[3, 5, 7]), 1e-6).unwrap();
        assert!((t.eta_th_db - 9.3).abs() < 0.05, "{}", t.eta_th_db);
        assert!((2.0 * q_function(t.x_delta) - 1e-6).abs() < 1e-9);
        let t = snr_threshold(&set(&[2, 3, 5, 7]), 1e-6).unwrap();
        assert!((t.eta_th_db - 6.1).abs() < 0.05);
        let t = snr_threshold(&set(&[3, 5, 7, 11]), 1e-6).unwrap();
        assert!((t.eta_th_db - 4.5).abs() < 0.05);
        assert!(snr_threshold(&set(&[3, 5, 7]), 0.5).is_err());
    }

    #[test]
    fn approx_gamma_xi_examples() {
        assert!((approx_gamma_xi(&set(&[3, 5, 7])) - 49.0 / 15.0).abs() < 1e-12);
        let exact = 11025.0 * xi_psi_max(&set(&[3, 5, 7]));
        assert!((exact - 3.478).abs() < 1e-3);
        assert!((approx_gamma_xi(&set(&[11, 13, 17])) - 289.0 / 143.0).abs() < 1e-12);
        assert_eq!(approx_gamma_xi(&set(&[4, 9])), 81.0 / 4.0);
    }

    #[test]
    fn consecutive_primes_flag() {
        assert!(is_consecutive_primes(&[2, 3, 5, 7]));
        assert!(is_consecutive_primes(&[11, 13, 17]));
        assert!(!is_consecutive_primes(&[2, 5, 7, 13]));
        assert!(!is_consecutive_primes(&[5, 6, 7]));
    }

    #[test]
    fn search_infeasible() {
        assert!(matches!(
            config_search(8, &[6]),
            Err(Error::NoFeasibleConfiguration { .. })
        ));
        assert!(config_search(4, &[2]).is_err());
    }
}
