//! JSON run configuration shared by the command-line front end and examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crt::ModuliSet;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Method, DEFAULT_SEARCH_STEP};
use crate::montecarlo::{CfoMode, SweepSpec};
use crate::signal::{SegmentOrder, Snr, WaveformSpec};

fn default_sample_period() -> f64 {
    1.0 / 15.36e6
}

fn default_m_scale() -> u64 {
    2
}

fn default_zc_root() -> u64 {
    1
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_search_step() -> f64 {
    DEFAULT_SEARCH_STEP
}

fn default_trials() -> usize {
    10_000
}

fn default_cfo() -> CfoMode {
    CfoMode::UniformSymmetric
}

fn default_deltas() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

fn default_ier_methods() -> Vec<Method> {
    vec![Method::Ccmle]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Needed by `sweep` and `estimate`, not by `threshold`.
    #[serde(default)]
    pub n_fft: Option<usize>,
    #[serde(default = "default_sample_period")]
    pub sample_period: f64,
    pub gammas: Vec<u64>,
    #[serde(default = "default_m_scale")]
    pub m_scale: u64,
    #[serde(default = "default_zc_root")]
    pub zc_root: u64,
    #[serde(default)]
    pub segment_order: SegmentOrder,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_search_step")]
    pub search_step: f64,
    #[serde(default)]
    pub snr_hint_db: Option<f64>,
    /// SNR points of the MSE sweep, ascending.
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    /// SNR points of the IER sweep; the MSE grid when absent.
    #[serde(default)]
    pub ier_snr_grid_db: Option<Vec<f64>>,
    #[serde(default = "default_ier_methods")]
    pub ier_methods: Vec<Method>,
    #[serde(default = "default_trials")]
    pub trials_per_point: usize,
    #[serde(default = "default_cfo")]
    pub cfo: CfoMode,
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// Failure probabilities for the threshold table.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// A config naming `N` and the ranges, everything else defaulted.
    pub fn minimal(n_fft: usize, gammas: &[u64]) -> Self {
        Self {
            n_fft: Some(n_fft),
            sample_period: default_sample_period(),
            gammas: gammas.to_vec(),
            m_scale: default_m_scale(),
            zc_root: default_zc_root(),
            segment_order: SegmentOrder::default(),
            methods: default_methods(),
            search_step: default_search_step(),
            snr_hint_db: None,
            snr_grid_db: Vec::new(),
            ier_snr_grid_db: None,
            ier_methods: default_ier_methods(),
            trials_per_point: default_trials(),
            cfo: default_cfo(),
            master_seed: None,
            deltas: default_deltas(),
            output_dir: None,
        }
    }

    pub fn moduli(&self) -> Result<ModuliSet> {
        ModuliSet::new(&self.gammas, self.m_scale)
    }

    pub fn n_fft(&self) -> Result<usize> {
        self.n_fft
            .ok_or_else(|| Error::InvalidConfig("missing field `n_fft`".into()))
    }

    pub fn waveform(&self) -> Result<WaveformSpec> {
        WaveformSpec::with_order(
            self.n_fft()?,
            self.sample_period,
            self.moduli()?,
            self.zc_root,
            self.segment_order,
        )
    }

    pub fn estimator(&self, method: Method) -> Result<EstimatorConfig> {
        Ok(EstimatorConfig::new(self.waveform()?, method)
            .with_search_step(self.search_step)?
            .with_snr_hint(self.snr_hint_db))
    }

    fn estimators(&self, methods: &[Method]) -> Result<Vec<EstimatorConfig>> {
        if methods.is_empty() {
            return Err(Error::InvalidConfig("method list is empty".into()));
        }
        methods.iter().map(|&m| self.estimator(m)).collect()
    }

    /// Sweep over `snr_grid_db` for every configured method.
    pub fn mse_sweep(&self, master_seed: u64) -> Result<SweepSpec> {
        let spec = SweepSpec {
            configs: self.estimators(&self.methods)?,
            snr_grid: self.snr_grid_db.iter().map(|&d| Snr::Db(d)).collect(),
            trials_per_point: self.trials_per_point,
            cfo_mode: self.cfo,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ier_sweep(&self, master_seed: u64) -> Result<SweepSpec> {
        let grid = self.ier_snr_grid_db.as_ref().unwrap_or(&self.snr_grid_db);
        let spec = SweepSpec {
            configs: self.estimators(&self.ier_methods)?,
            snr_grid: grid.iter().map(|&d| Snr::Db(d)).collect(),
            trials_per_point: self.trials_per_point,
            cfo_mode: self.cfo,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Hex SHA-256 of a config file's bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
