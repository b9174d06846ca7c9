//! Seeded Monte-Carlo trials and SNR sweeps.
//!
//! Every trial owns a seed derived from `(master_seed, snr_index,
//! trial_index)`, so a trial's noise does not depend on how many trials run,
//! in which order, or on how many workers. All methods at one SNR point see
//! the same noise and the same CFO draws.
//!
//! Estimation error is measured on the CFO circle: `ε_N` and `ε_N + N`
//! produce identical received samples, so the error is the difference
//! wrapped into `[−N/2, N/2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorConfig, Method};
use crate::signal::{self, ChannelParams, Snr, TrainingWaveform};
use crate::theory::{self, ThresholdQuery};

/// Integer-error threshold in subcarrier units.
pub const INTEGER_ERROR_THRESHOLD: f64 = 1.0;

const PHASE_STREAM: u64 = u64::MAX;
const CFO_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CfoMode {
    Fixed {
        value: f64,
    },
    /// `ε_N` uniform on `[−N/2, N/2)`, drawn per trial.
    UniformSymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// One configuration per method; all are run at every SNR point.
    pub configs: Vec<EstimatorConfig>,
    pub snr_grid: Vec<Snr>,
    pub trials_per_point: usize,
    pub cfo_mode: CfoMode,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() {
            return Err(Error::InvalidSweep("no estimator configured".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidSweep(
                "trials_per_point must be at least 1".into(),
            ));
        }
        if self.snr_grid.is_empty() {
            return Err(Error::InvalidSweep("empty SNR grid".into()));
        }
        let keys: Vec<f64> = self.snr_grid.iter().map(|s| snr_key(*s)).collect();
        if keys.iter().any(|k| k.is_nan() || *k == f64::NEG_INFINITY) {
            return Err(Error::InvalidSweep("SNR grid must be finite".into()));
        }
        if keys.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSweep("SNR grid must be sorted".into()));
        }
        if let CfoMode::Fixed { value } = self.cfo_mode {
            if !value.is_finite() {
                return Err(Error::InvalidSweep(format!(
                    "fixed CFO {value} is not finite"
                )));
            }
        }
        Ok(())
    }
}

fn snr_key(s: Snr) -> f64 {
    match s {
        Snr::Db(db) if db.is_finite() => db,
        Snr::Db(_) => f64::NAN,
        Snr::Noiseless => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub method: Method,
    /// `None` for the noiseless sentinel.
    pub snr_db: Option<f64>,
    pub mse: f64,
    pub ier: f64,
    pub trials: usize,
    /// Closed-form `Δ_MSE` at this SNR (0 when noiseless).
    pub delta_mse_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `η_th` of the first configuration at `δ = 1/trials_per_point`, when
    /// that `δ` is meaningful.
    pub eta_th: Option<ThresholdQuery>,
    pub master_seed: u64,
    pub trials_per_point: usize,
}

pub const CSV_HEADER: &str = "method,snr_db,mse,ier,trials,delta_mse_theory";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let snr = p
                .snr_db
                .map_or_else(|| "inf".to_string(), |db| db.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.method, snr, p.mse, p.ier, p.trials, p.delta_mse_theory
            ));
        }
        out
    }

    pub fn points_for(&self, method: Method) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(move |p| p.method == method)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial_index` at SNR point `point_index`.
pub fn trial_seed(master_seed: u64, point_index: u64, trial_index: u64) -> u64 {
    let point = splitmix64(master_seed ^ splitmix64(point_index));
    splitmix64(point ^ splitmix64(trial_index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn param_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// CFO for one trial under `mode`.
pub fn draw_cfo(mode: CfoMode, n_fft: usize, trial_seed: u64) -> f64 {
    match mode {
        CfoMode::Fixed { value } => value,
        CfoMode::UniformSymmetric => {
            let half = n_fft as f64 / 2.0;
            param_rng(trial_seed, CFO_STREAM).gen_range(-half..half)
        }
    }
}

/// A configuration with its preamble built once.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    cfg: EstimatorConfig,
    wave: TrainingWaveform,
}

impl TrialRunner {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        let wave = signal::build_preamble(&cfg.spec)?;
        Ok(Self { cfg, wave })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Synthesizes, corrupts and estimates one preamble; returns `ε̂_N`.
    /// The channel phase is drawn uniformly from the trial seed.
    pub fn run(&self, eps_n: f64, snr: Snr, trial_seed: u64) -> Result<f64> {
        let phase = param_rng(trial_seed, PHASE_STREAM).gen_range(0.0..std::f64::consts::TAU);
        let ch = ChannelParams::new(eps_n, snr, phase)?;
        let buf = signal::apply_channel(&self.wave, &ch, &self.cfg.spec, trial_seed);
        Ok(estimators::estimate(&buf, &self.cfg)?.eps_n)
    }

    /// Error on the CFO circle for one trial.
    pub fn error(&self, eps_n: f64, snr: Snr, trial_seed: u64) -> Result<f64> {
        let est = self.run(eps_n, snr, trial_seed)?;
        Ok(cfo_error(est, eps_n, self.cfg.spec.n_fft()))
    }
}

/// `ε̂_N − ε_N` wrapped into `[−N/2, N/2)`.
pub fn cfo_error(estimate: f64, truth: f64, n_fft: usize) -> f64 {
    signal::wrap_to_symmetric(estimate - truth, n_fft as f64)
}

pub fn run_trial(cfg: &EstimatorConfig, eps_n: f64, snr: Snr, trial_seed: u64) -> Result<f64> {
    TrialRunner::new(cfg.clone())?.run(eps_n, snr, trial_seed)
}

/// Fraction of estimates off by more than one subcarrier.
pub fn compute_ier(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("estimates"));
    }
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            what: "truths",
            expected: estimates.len(),
            actual: truths.len(),
        });
    }
    let failures = estimates
        .iter()
        .zip(truths)
        .filter(|(e, t)| (*e - *t).abs() > INTEGER_ERROR_THRESHOLD)
        .count();
    Ok(failures as f64 / estimates.len() as f64)
}

fn summarize(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    // summed in trial order so totals are bit-reproducible
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    let failures = errors
        .iter()
        .filter(|e| e.abs() > INTEGER_ERROR_THRESHOLD)
        .count();
    (mse, failures as f64 / n)
}

/// Runs every configuration at every SNR point on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let runners = spec
        .configs
        .iter()
        .cloned()
        .map(TrialRunner::new)
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(runners.len() * spec.snr_grid.len());
    for runner in &runners {
        let n_fft = runner.config().spec.n_fft();
        for (point_index, &snr) in spec.snr_grid.iter().enumerate() {
            let errors = (0..spec.trials_per_point as u64)
                .into_par_iter()
                .map(|trial| {
                    let seed = trial_seed(spec.master_seed, point_index as u64, trial);
                    let eps = draw_cfo(spec.cfo_mode, n_fft, seed);
                    runner.error(eps, snr, seed)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mse, ier) = summarize(&errors);
            let delta_mse_theory = match snr {
                Snr::Db(_) => theory::delta_mse(runner.config().spec.mset(), n_fft, snr.linear())?,
                Snr::Noiseless => 0.0,
            };
            points.push(SweepPoint {
                method: runner.config().method,
                snr_db: snr.db(),
                mse,
                ier,
                trials: spec.trials_per_point,
                delta_mse_theory,
            });
        }
    }

    let delta = 1.0 / spec.trials_per_point as f64;
    let eta_th = if delta < 0.5 {
        Some(theory::snr_threshold(spec.configs[0].spec.mset(), delta)?)
    } else {
        None
    };
    Ok(SweepResult {
        points,
        eta_th,
        master_seed: spec.master_seed,
        trials_per_point: spec.trials_per_point,
    })
}

/// Like [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidSweep(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_sweep(spec))
}
