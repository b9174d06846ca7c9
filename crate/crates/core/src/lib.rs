//! Carrier-frequency-offset estimation for OFDM training preambles built
//! from `K` repeated Zadoff-Chu segments with co-prime sample intervals.
//!
//! Each segment gives a wrapped CFO estimate; [`crt`] fuses them into one
//! estimate over the full range with the maximum-likelihood robust CRT.
//! [`estimators`] runs that and three baselines on received samples,
//! [`theory`] holds the closed-form MSE and SNR-threshold models and
//! [`montecarlo`] the seeded sweep harness.

pub mod cli;
pub mod config;
pub mod crt;
pub mod error;
pub mod estimators;
pub mod io;
pub mod montecarlo;
pub mod signal;
pub mod theory;

pub use config::RunConfig;
pub use crt::{ModuliSet, RemainderObservation};
pub use error::{Error, Result};
pub use estimators::{estimate, CfoEstimate, EstimatorConfig, Method};
pub use montecarlo::{run_sweep, CfoMode, SweepResult, SweepSpec};
pub use signal::{apply_channel, build_preamble, ChannelParams, IqBuffer, Snr, WaveformSpec};
pub use theory::{snr_threshold, PerformanceModel, ThresholdQuery};
