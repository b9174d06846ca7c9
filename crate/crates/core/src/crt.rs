//! Modular arithmetic over a co-prime range system and robust reconstruction
//! of a real number from erroneous remainders.
//!
//! A real `x` in `[0, M·Γ)` is observed through its remainders modulo the
//! scaled moduli `M_i = M·Γ_i`. All remainders share the same residue modulo
//! `M` (the common remainder), so reconstruction splits into estimating that
//! common remainder from noisy copies and then folding the integer quotients
//! back together with the ordinary integer CRT over `Γ_i`.
//!
//! Two estimators of the common remainder are provided: the maximum
//! likelihood one, which weights each copy by its inverse variance and only
//! needs to test at most `K` candidates, and an exhaustive grid search used by
//! the equal-variance baseline and as an oracle.

use serde::Serialize;

use crate::error::{Error, Result};

/// Co-prime range widths `Γ_1 < … < Γ_K` together with every constant
/// derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuliSet {
    gammas: Vec<u64>,
    m_scale: u64,
    gamma_prod: u64,
    sample_intervals: Vec<u64>,
    inverses: Vec<u64>,
    scaled_moduli: Vec<u64>,
}

impl ModuliSet {
    /// Validates the range widths and derives `Γ`, `L_i = Γ/Γ_i`, the
    /// inverses `L̄_i` of `L_i` modulo `Γ_i` and `M_i = M·Γ_i`.
    pub fn new(gammas: &[u64], m_scale: u64) -> Result<Self> {
        if gammas.len() < 2 {
            return Err(Error::TooFewModuli {
                min: 2,
                got: gammas.len(),
            });
        }
        if let Some((index, &value)) = gammas.iter().enumerate().find(|(_, &g)| g < 2) {
            return Err(Error::ModulusTooSmall { index, value });
        }
        for (i, &a) in gammas.iter().enumerate() {
            for &b in &gammas[i + 1..] {
                let g = gcd(a, b);
                if g != 1 {
                    return Err(Error::NotCoprime { a, b, gcd: g });
                }
            }
        }
        for w in gammas.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::NotAscending {
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        if m_scale < 2 {
            return Err(Error::ScaleTooSmall(m_scale));
        }

        let gamma_prod = gammas
            .iter()
            .try_fold(1u64, |acc, &g| acc.checked_mul(g))
            .ok_or(Error::Overflow)?;
        m_scale.checked_mul(gamma_prod).ok_or(Error::Overflow)?;

        let sample_intervals: Vec<u64> = gammas.iter().map(|&g| gamma_prod / g).collect();
        let inverses = sample_intervals
            .iter()
            .zip(gammas)
            .map(|(&l, &g)| mod_inverse(l, g))
            .collect::<Result<Vec<_>>>()?;
        let scaled_moduli = gammas.iter().map(|&g| m_scale * g).collect();

        Ok(Self {
            gammas: gammas.to_vec(),
            m_scale,
            gamma_prod,
            sample_intervals,
            inverses,
            scaled_moduli,
        })
    }

    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[u64] {
        &self.gammas
    }

    pub fn m_scale(&self) -> u64 {
        self.m_scale
    }

    /// `Γ = Γ_1·…·Γ_K`.
    pub fn gamma_prod(&self) -> u64 {
        self.gamma_prod
    }

    /// Sample intervals `L_i = Γ/Γ_i`, descending.
    pub fn sample_intervals(&self) -> &[u64] {
        &self.sample_intervals
    }

    pub fn inverses(&self) -> &[u64] {
        &self.inverses
    }

    /// Scaled moduli `M_i = M·Γ_i`.
    pub fn scaled_moduli(&self) -> &[u64] {
        &self.scaled_moduli
    }

    /// Full reconstruction range `M·Γ`.
    pub fn full_range(&self) -> f64 {
        (self.m_scale * self.gamma_prod) as f64
    }

    /// `L_i³` as reals.
    pub fn interval_cubes(&self) -> Vec<f64> {
        self.sample_intervals
            .iter()
            .map(|&l| (l as f64).powi(3))
            .collect()
    }
}

/// Noisy remainders `ε̂_{M_i}` and the variances of their errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderObservation {
    values: Vec<f64>,
    variances: Vec<f64>,
}

impl RemainderObservation {
    pub fn new(values: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if values.len() != variances.len() {
            return Err(Error::LengthMismatch {
                what: "variances",
                expected: values.len(),
                actual: variances.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("remainder observation"));
        }
        check_variances(&variances)?;
        Ok(Self { values, variances })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    fn check_against(&self, mset: &ModuliSet) -> Result<()> {
        if self.values.len() != mset.k() {
            return Err(Error::LengthMismatch {
                what: "remainders",
                expected: mset.k(),
                actual: self.values.len(),
            });
        }
        for (index, (&value, &m)) in self.values.iter().zip(mset.scaled_moduli()).enumerate() {
            let modulus = m as f64;
            if !(0.0..modulus).contains(&value) {
                return Err(Error::RemainderOutOfRange {
                    index,
                    value,
                    modulus,
                });
            }
        }
        Ok(())
    }
}

/// Outcome of the common-remainder search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonRemainderSolution {
    pub r_hat: f64,
    pub candidates: Vec<f64>,
    pub objective: f64,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `n` via the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::NoInverse { a, modulus: n });
    }
    let (mut old_r, mut r) = (i128::from(a % n), i128::from(n));
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NoInverse { a, modulus: n });
    }
    Ok(old_s.rem_euclid(i128::from(n)) as u64)
}

/// Representative of `x` modulo `m` in `[0, m)`.
pub fn wrap_mod(x: f64, m: f64) -> f64 {
    let r = x.rem_euclid(m);
    // rem_euclid rounds tiny negative inputs up to exactly `m`
    if r >= m {
        0.0
    } else {
        r
    }
}

/// Signed circular distance `a − x − [(a − x)/M]·M`, in `[−M/2, M/2]`.
/// `[·]` rounds half away from zero.
pub fn circular_distance(a: f64, x: f64, modulus: f64) -> f64 {
    let d = a - x;
    d - (d / modulus).round() * modulus
}

fn check_variances(variances: &[f64]) -> Result<()> {
    match variances
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        Some((index, &value)) => Err(Error::InvalidVariance { index, value }),
        None => Ok(()),
    }
}

/// Inverse-variance weights, normalized to sum to one.
pub fn mle_weights(variances: &[f64]) -> Result<Vec<f64>> {
    if variances.is_empty() {
        return Err(Error::EmptyInput("variances"));
    }
    check_variances(variances)?;
    // scale by the smallest variance so that extreme spreads stay finite
    let min = variances.iter().copied().fold(f64::INFINITY, f64::min);
    let precisions: Vec<f64> = variances.iter().map(|&v| min / v).collect();
    let total: f64 = precisions.iter().sum();
    Ok(precisions.into_iter().map(|p| p / total).collect())
}

/// Weighted squared circular distance `Σ w_i·d_M²(r_i, x)`.
pub fn weighted_objective(common: &[f64], weights: &[f64], x: f64, modulus: f64) -> f64 {
    common
        .iter()
        .zip(weights)
        .map(|(&r, &w)| {
            let d = circular_distance(r, x, modulus);
            w * d * d
        })
        .sum()
}

/// The candidate set `Ω`: the weighted mean shifted by `M` times each
/// prefix sum of the weights taken in ascending order of the remainders.
/// Entries that coincide exactly are reported once.
pub fn candidate_set(common: &[f64], weights: &[f64], modulus: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..common.len()).collect();
    order.sort_by(|&a, &b| common[a].total_cmp(&common[b]));

    let mean: f64 = common.iter().zip(weights).map(|(r, w)| r * w).sum();
    let mut out = Vec::with_capacity(common.len());
    let mut prefix = 0.0;
    for &i in &order {
        prefix += weights[i];
        let c = wrap_mod(mean + modulus * prefix, modulus);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Maximum likelihood common remainder from per-modulus copies `common`
/// (each already reduced modulo `modulus`) and their weights.
///
/// Ties in the objective go to the smallest candidate.
pub fn common_remainder(common: &[f64], weights: &[f64], modulus: f64) -> CommonRemainderSolution {
    let candidates = candidate_set(common, weights, modulus);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &x in &candidates {
        let obj = weighted_objective(common, weights, x, modulus);
        if obj < best.0 || (obj == best.0 && x < best.1) {
            best = (obj, x);
        }
    }
    CommonRemainderSolution {
        r_hat: best.1,
        candidates,
        objective: best.0,
    }
}

fn common_copies(obs: &RemainderObservation, mset: &ModuliSet) -> Vec<f64> {
    let m = mset.m_scale() as f64;
    obs.values().iter().map(|&v| wrap_mod(v, m)).collect()
}

pub fn solve_common_remainder(
    obs: &RemainderObservation,
    mset: &ModuliSet,
) -> Result<CommonRemainderSolution> {
    obs.check_against(mset)?;
    let weights = mle_weights(obs.variances())?;
    let common = common_copies(obs, mset);
    Ok(common_remainder(&common, &weights, mset.m_scale() as f64))
}

/// Folds the remainders back into `[0, M·Γ)` given an estimate of the common
/// remainder.
///
/// The integer quotients are `q̂_i = [(ε̂_{M_i} − r̂^c)/M]`, taken against the
/// common estimate rather than each copy so that copies straddling the
/// `0 ≡ M` seam still yield consistent quotients.
pub fn reconstruct_from_common(values: &[f64], mset: &ModuliSet, r_hat: f64) -> f64 {
    let m = mset.m_scale() as f64;
    let gamma = i128::from(mset.gamma_prod());
    let folded: i128 = values
        .iter()
        .zip(mset.gammas())
        .zip(mset.sample_intervals().iter().zip(mset.inverses()))
        .map(|((&v, &g), (&l, &inv))| {
            let q = ((v - r_hat) / m).round() as i128;
            let q = q.rem_euclid(i128::from(g));
            i128::from(inv) * i128::from(l) % gamma * q % gamma
        })
        .sum::<i128>()
        .rem_euclid(gamma);
    m * folded as f64 + r_hat
}

/// Maximum likelihood reconstruction of `ε_M ∈ [0, M·Γ)`.
pub fn reconstruct_mle(obs: &RemainderObservation, mset: &ModuliSet) -> Result<f64> {
    let sol = solve_common_remainder(obs, mset)?;
    Ok(reconstruct_from_common(obs.values(), mset, sol.r_hat))
}

/// Classic integer CRT baseline.
///
/// Each remainder is rounded to the nearest integer and the integer part is
/// rebuilt by the generalized CRT over the (non co-prime) moduli `M_i`,
/// merged in order of decreasing sample interval. When a rounded residue
/// disagrees with the running solution modulo the shared factor, it is moved
/// to the nearest consistent residue. The fractional part is taken from the
/// first (longest) interval.
pub fn reconstruct_classic(obs: &RemainderObservation, mset: &ModuliSet) -> Result<f64> {
    obs.check_against(mset)?;
    let values = obs.values();
    let mut acc: i128 = 0;
    let mut acc_mod: i128 = 1;
    for (&v, &m) in values.iter().zip(mset.scaled_moduli()) {
        let m = i128::from(m);
        let a = (v.round() as i128).rem_euclid(m);
        (acc, acc_mod) = merge_congruence(acc, acc_mod, a, m);
    }
    let first = values[0];
    let frac = first - first.round();
    Ok(wrap_mod(acc as f64 + frac, mset.full_range()))
}

/// Combines `x ≡ a (mod m)` with `x ≡ b (mod n)`; `b` is first nudged to the
/// nearest residue that agrees with `a` modulo `gcd(m, n)`.
fn merge_congruence(a: i128, m: i128, b: i128, n: i128) -> (i128, i128) {
    let g = gcd_i128(m, n);
    let mut diff = (a - b).rem_euclid(g);
    if 2 * diff >= g {
        diff -= g;
    }
    let b = (b + diff).rem_euclid(n);
    let n_g = n / g;
    let lcm = m * n_g;
    if n_g == 1 {
        return (a.rem_euclid(lcm), lcm);
    }
    let m_g = (m / g).rem_euclid(n_g);
    let inv = i128::from(
        mod_inverse(m_g as u64, n_g as u64).expect("m/g and n/g are co-prime by construction"),
    );
    let t = ((b - a) / g).rem_euclid(n_g) * inv % n_g;
    ((a + m * t).rem_euclid(lcm), lcm)
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    gcd(a.unsigned_abs() as u64, b.unsigned_abs() as u64) as i128
}

/// Grid points `{0, λ, 2λ, …} ∩ [0, M)`.
fn search_grid(modulus: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = (modulus / step).ceil() as usize;
    (0..count)
        .map(move |k| k as f64 * step)
        .filter(move |&x| x < modulus)
}

fn check_step(step: f64, modulus: f64) -> Result<()> {
    let max = modulus / 10.0;
    if !(step > 0.0 && step <= max) {
        return Err(Error::InvalidSearchStep { step, max });
    }
    Ok(())
}

/// Exhaustive grid minimization of the (optionally weighted) squared circular
/// distance. Returns `(x, objective)`; ties go to the smallest grid point.
pub fn grid_search_common_remainder(
    common: &[f64],
    weights: Option<&[f64]>,
    modulus: f64,
    step: f64,
) -> Result<(f64, f64)> {
    check_step(step, modulus)?;
    let uniform;
    let weights = match weights {
        Some(w) => w,
        None => {
            uniform = vec![1.0; common.len()];
            &uniform
        }
    };
    let mut best = (0.0, f64::INFINITY);
    for x in search_grid(modulus, step) {
        let obj = weighted_objective(common, weights, x, modulus);
        if obj < best.1 {
            best = (x, obj);
        }
    }
    Ok(best)
}

/// Equal-variance common remainder: unweighted grid search with step `λ`.
pub fn solve_common_remainder_search(
    obs: &RemainderObservation,
    mset: &ModuliSet,
    step: f64,
) -> Result<f64> {
    obs.check_against(mset)?;
    let common = common_copies(obs, mset);
    grid_search_common_remainder(&common, None, mset.m_scale() as f64, step).map(|(x, _)| x)
}
