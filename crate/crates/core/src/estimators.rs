//! End-to-end CFO estimators on a received preamble.
//!
//! All four methods share the same correlator output. The CRT-based ones
//! turn each `P_{L_i}` into a remainder `ε̂_{M_i} ∈ [0, M·Γ_i)` of the CFO
//! expressed in `(MΓT_s)⁻¹` units and differ only in how the remainders are
//! combined. Moose uses the longest segment alone and is limited to
//! `|ε_N| < N/(2L_1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crt::{self, RemainderObservation};
use crate::error::{Error, Result};
use crate::signal::{self, IqBuffer, WaveformSpec};
use crate::theory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ccmle,
    ClassicCrt,
    ClosedFormCrt,
    Moose,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Ccmle,
        Method::ClosedFormCrt,
        Method::ClassicCrt,
        Method::Moose,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ccmle => "ccmle",
            Method::ClassicCrt => "classic_crt",
            Method::ClosedFormCrt => "closed_form_crt",
            Method::Moose => "moose",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

pub const DEFAULT_SEARCH_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub spec: WaveformSpec,
    pub method: Method,
    /// Grid step `λ` of the closed-form baseline.
    pub search_step: f64,
    /// SNR fed to the variance model. Every `σ_i²` scales with `1/η` alike,
    /// so the weights do not depend on it; without a hint the variances are
    /// reported at 0 dB.
    pub snr_hint_db: Option<f64>,
}

impl EstimatorConfig {
    pub fn new(spec: WaveformSpec, method: Method) -> Self {
        Self {
            spec,
            method,
            search_step: DEFAULT_SEARCH_STEP,
            snr_hint_db: None,
        }
    }

    pub fn with_search_step(mut self, step: f64) -> Result<Self> {
        let max = self.spec.mset().m_scale() as f64 / 10.0;
        if !(step > 0.0 && step <= max) {
            return Err(Error::InvalidSearchStep { step, max });
        }
        self.search_step = step;
        Ok(self)
    }

    pub fn with_snr_hint(mut self, snr_db: Option<f64>) -> Self {
        self.snr_hint_db = snr_db;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate {
    /// `ε̂_{M_i}` for the CRT methods; `ε̂_N` before wrapping for Moose.
    pub remainder: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfoEstimate {
    /// `ε̂_N ∈ [−N/2, N/2)`.
    pub eps_n: f64,
    /// `ε̂_M ∈ [0, M·Γ)`.
    pub eps_m: f64,
    pub per_interval: Vec<IntervalEstimate>,
    pub method: Method,
    /// Width of the unambiguous CFO range in subcarrier units.
    pub range: f64,
}

/// Runs whichever method `cfg` selects.
pub fn estimate(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<CfoEstimate> {
    match cfg.method {
        Method::Ccmle => ccmle_estimate(buf, cfg),
        Method::ClassicCrt => classic_crt_estimate(buf, cfg),
        Method::ClosedFormCrt => closed_form_crt_estimate(buf, cfg),
        Method::Moose => moose_estimate(buf, cfg),
    }
}

/// Per-interval remainders `ε̂_{M_i} = MΓ/(2πL_i)·arg P_{L_i}` and their
/// model variances.
pub fn interval_observation(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<RemainderObservation> {
    let spec = &cfg.spec;
    let mset = spec.mset();
    let numerator = mset.full_range();
    let values = mset
        .sample_intervals()
        .iter()
        .zip(mset.scaled_moduli())
        .enumerate()
        .map(|(i, (&l, &m))| {
            let p = signal::correlate(buf, i, spec)?;
            let v = signal::estimate_single_interval(p, numerator, l)?;
            Ok(crt::wrap_mod(v, m as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let snr = 10f64.powf(cfg.snr_hint_db.unwrap_or(0.0) / 10.0);
    let variances = theory::variance_model(mset, snr)?;
    RemainderObservation::new(values, variances)
}

fn finish(
    eps_m: f64,
    obs: &RemainderObservation,
    cfg: &EstimatorConfig,
    method: Method,
) -> CfoEstimate {
    let n = cfg.spec.n_fft() as f64;
    let full = cfg.spec.mset().full_range();
    CfoEstimate {
        eps_n: signal::wrap_to_symmetric(n / full * eps_m, n),
        eps_m,
        per_interval: obs
            .values()
            .iter()
            .zip(obs.variances())
            .map(|(&remainder, &variance)| IntervalEstimate {
                remainder,
                variance,
            })
            .collect(),
        method,
        range: n,
    }
}

/// The CRT-based maximum likelihood estimator.
pub fn ccmle_estimate(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<CfoEstimate> {
    let obs = interval_observation(buf, cfg)?;
    let eps_m = crt::reconstruct_mle(&obs, cfg.spec.mset())?;
    Ok(finish(eps_m, &obs, cfg, Method::Ccmle))
}

/// Integer CRT on rounded remainders, fractional part from the longest
/// interval.
pub fn classic_crt_estimate(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<CfoEstimate> {
    let obs = interval_observation(buf, cfg)?;
    let eps_m = crt::reconstruct_classic(&obs, cfg.spec.mset())?;
    Ok(finish(eps_m, &obs, cfg, Method::ClassicCrt))
}

/// Robust CRT under an equal-variance assumption: the common remainder comes
/// from an unweighted grid search, the quotients are folded as usual.
pub fn closed_form_crt_estimate(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<CfoEstimate> {
    let obs = interval_observation(buf, cfg)?;
    let mset = cfg.spec.mset();
    let r_hat = crt::solve_common_remainder_search(&obs, mset, cfg.search_step)?;
    let eps_m = crt::reconstruct_from_common(obs.values(), mset, r_hat);
    Ok(finish(eps_m, &obs, cfg, Method::ClosedFormCrt))
}

/// Single-interval estimate from the longest segment (the Moose estimator).
pub fn moose_estimate(buf: &IqBuffer, cfg: &EstimatorConfig) -> Result<CfoEstimate> {
    let spec = &cfg.spec;
    let mset = spec.mset();
    let n = spec.n_fft() as f64;
    let l1 = mset.sample_intervals()[0];
    let p = signal::correlate(buf, 0, spec)?;
    let raw = signal::estimate_single_interval(p, n, l1)?;
    let range = n / l1 as f64;
    let eps_n = signal::wrap_to_symmetric(raw, range);
    let snr = 10f64.powf(cfg.snr_hint_db.unwrap_or(0.0) / 10.0);
    let variance = theory::variance_model(mset, snr)?[0] * (n / mset.full_range()).powi(2);
    let full = mset.full_range();
    Ok(CfoEstimate {
        eps_n,
        eps_m: crt::wrap_mod(full / n * eps_n, full),
        per_interval: vec![IntervalEstimate {
            remainder: raw,
            variance,
        }],
        method: Method::Moose,
        range,
    })
}
