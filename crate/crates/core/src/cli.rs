//! Command-line front end. Each command loads its inputs, calls the library
//! and writes results; no estimation or theory lives here.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{config_hash, RunConfig};
use crate::error::{Error, Result};
use crate::estimators::{self, CfoEstimate};
use crate::io;
use crate::montecarlo::{self, SweepResult, SweepSpec};
use crate::signal::{IqBuffer, Snr};
use crate::theory::{self, ConfigCandidate, ThresholdQuery};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "crt-cfo", version, about = "CRT-based CFO estimation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo MSE and IER sweeps.
    Sweep(SweepArgs),
    /// SNR threshold table for a set of failure probabilities.
    Threshold(ThresholdArgs),
    /// Rank co-prime range configurations for a DFT size.
    Configure(ConfigureArgs),
    /// Estimate the CFO of a captured preamble.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to `output_dir` in the config, then `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, env = "CFO_CRT_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Replace both SNR grids with a single noiseless point.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigureArgs {
    #[arg(long)]
    pub n_fft: usize,
    /// Number of ranges; repeat for several.
    #[arg(long, required = true)]
    pub k: Vec<usize>,
    /// Extra configuration to score, e.g. `2,5,7,13`; repeatable.
    #[arg(long, value_delimiter = ',', num_args = 1.., action = clap::ArgAction::Append)]
    pub gammas: Vec<u64>,
    /// Rows to print besides consecutive-prime and queried ones.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Emit JSON records instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub iq: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
}

/// Parses the process arguments, runs the command and returns the exit
/// status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::Threshold(a) => cmd_threshold(&a.config),
        Command::Configure(a) => cmd_configure(&a),
        Command::Estimate(a) => cmd_estimate(&a.iq, &a.config),
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    config_path: String,
    config_sha256: String,
    master_seed: u64,
    trials_per_point: usize,
    noiseless: bool,
    files: [&'static str; 4],
}

const MSE_CSV: &str = "mse_sweep.csv";
const IER_CSV: &str = "ier_sweep.csv";
const MSE_JSON: &str = "mse_sweep.json";
const IER_JSON: &str = "ier_sweep.json";

fn execute(spec: &mut SweepSpec, noiseless: bool, workers: Option<usize>) -> Result<SweepResult> {
    if noiseless {
        spec.snr_grid = vec![Snr::Noiseless];
    }
    match workers {
        Some(w) => montecarlo::run_sweep_with_workers(spec, w),
        None => montecarlo::run_sweep(spec),
    }
}

/// Runs both sweeps and writes CSV, JSON and the manifest into the output
/// directory. Returns the directory used.
pub fn cmd_sweep(args: &SweepArgs) -> Result<PathBuf> {
    let raw = std::fs::read(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let mut cfg =
        RunConfig::from_json(&String::from_utf8_lossy(&raw)).map_err(|e| Error::Json {
            path: args.config.clone(),
            source: e,
        })?;
    if let Some(t) = args.trials {
        cfg.trials_per_point = t;
    }
    let seed = args.seed.or(cfg.master_seed).unwrap_or(DEFAULT_SEED);
    cfg.master_seed = Some(seed);
    if args.noiseless && cfg.snr_grid_db.is_empty() {
        // the grid is replaced anyway; keep validation from rejecting it
        cfg.snr_grid_db = vec![0.0];
    }
    let mut mse_spec = cfg.mse_sweep(seed)?;
    let mut ier_spec = cfg.ier_sweep(seed)?;
    if args.workers == Some(0) {
        return Err(Error::InvalidSweep("--workers must be at least 1".into()));
    }

    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let mse = execute(&mut mse_spec, args.noiseless, args.workers)?;
    let ier = execute(&mut ier_spec, args.noiseless, args.workers)?;

    io::write_atomic(&out.join(MSE_CSV), mse.to_csv().as_bytes())?;
    io::write_atomic(&out.join(IER_CSV), ier.to_csv().as_bytes())?;
    io::write_json(&out.join(MSE_JSON), &mse)?;
    io::write_json(&out.join(IER_JSON), &ier)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        config_path: args.config.display().to_string(),
        config_sha256: config_hash(&raw),
        master_seed: seed,
        trials_per_point: cfg.trials_per_point,
        noiseless: args.noiseless,
        files: [MSE_CSV, IER_CSV, MSE_JSON, IER_JSON],
    };
    io::write_json(&out.join("manifest.json"), &manifest)?;

    print!("{}", mse.to_csv());
    if let Some(th) = &mse.eta_th {
        println!(
            "# eta_th at delta = 1/trials ({:.3e}): {:.2} dB",
            th.delta, th.eta_th_db
        );
    }
    eprintln!("wrote {}", out.display());
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ThresholdReport<'a> {
    gammas: &'a [u64],
    m_scale: u64,
    thresholds: Vec<ThresholdQuery>,
}

pub fn cmd_threshold(config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let mset = cfg.moduli()?;
    if cfg.deltas.is_empty() {
        return Err(Error::InvalidConfig("`deltas` is empty".into()));
    }
    let thresholds = cfg
        .deltas
        .iter()
        .map(|&d| theory::snr_threshold(&mset, d))
        .collect::<Result<Vec<_>>>()?;

    println!("Gamma = {:?}", mset.gammas());
    println!("{:>10}  {:>8}  {:>10}", "delta", "x_delta", "eta_th_dB");
    for t in &thresholds {
        println!(
            "{:>10.1e}  {:>8.4}  {:>10.2}",
            t.delta, t.x_delta, t.eta_th_db
        );
    }
    let report = ThresholdReport {
        gammas: mset.gammas(),
        m_scale: mset.m_scale(),
        thresholds,
    };
    println!("{}", to_json(&report));
    Ok(())
}

/// Top rows, consecutive-prime rows and explicitly queried rows, in rank
/// order, each listed once.
pub fn configure_rows(args: &ConfigureArgs) -> Result<Vec<(usize, ConfigCandidate)>> {
    let ranked = theory::config_search(args.n_fft, &args.k)?;
    let mut rows: Vec<(usize, ConfigCandidate)> = ranked
        .into_iter()
        .enumerate()
        .filter(|(i, c)| *i < args.top || c.consecutive_primes)
        .map(|(i, c)| (i + 1, c))
        .collect();
    if !args.gammas.is_empty() {
        let queried = theory::evaluate_candidate(&args.gammas, args.n_fft)?;
        if !rows.iter().any(|(_, c)| c.mset == queried.mset) {
            rows.push((0, queried));
        }
    }
    Ok(rows)
}

pub fn cmd_configure(args: &ConfigureArgs) -> Result<()> {
    let rows = configure_rows(args)?;
    if args.json {
        let records: Vec<&ConfigCandidate> = rows.iter().map(|(_, c)| c).collect();
        println!("{}", to_json(&records));
        return Ok(());
    }
    println!(
        "N = {}, ranked by Pareto layer over (max Sigma_L, min eta_th) at delta = {:.0e}",
        args.n_fft,
        theory::CONFIG_SEARCH_DELTA
    );
    println!(
        "{:>5}  {:>6}  {:<18}  {:<26}  {:>12}  {:>9}  primes",
        "rank", "pareto", "gammas", "L_i", "Sigma_L", "eta_th_dB"
    );
    for (rank, c) in &rows {
        let (rank, layer) = if *rank == 0 {
            ("query".to_string(), "-".to_string())
        } else {
            (rank.to_string(), c.pareto_rank.to_string())
        };
        println!(
            "{:>5}  {:>6}  {:<18}  {:<26}  {:>12.4e}  {:>9.2}  {}",
            rank,
            layer,
            format!("{:?}", c.mset.gammas()),
            format!("{:?}", c.mset.sample_intervals()),
            c.model.sigma_l,
            c.threshold.eta_th_db,
            if c.consecutive_primes { "yes" } else { "" }
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    n_fft: usize,
    gammas: Vec<u64>,
    estimates: Vec<CfoEstimate>,
}

pub fn cmd_estimate(iq_path: &Path, config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let spec = cfg.waveform()?;
    let buf = IqBuffer::for_spec(io::read_iq_file(iq_path)?, &spec)?;
    let estimates = cfg
        .methods
        .iter()
        .map(|&m| estimators::estimate(&buf, &cfg.estimator(m)?))
        .collect::<Result<Vec<_>>>()?;
    let report = EstimateReport {
        n_fft: spec.n_fft(),
        gammas: cfg.gammas.clone(),
        estimates,
    };
    println!("{}", to_json(&report));
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}
