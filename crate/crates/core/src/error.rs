use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("at least {min} co-prime ranges are required, got {got}")]
    TooFewModuli { min: usize, got: usize },

    #[error("range width at index {index} is {value}; every range must be at least 2")]
    ModulusTooSmall { index: usize, value: u64 },

    #[error("range widths must be strictly ascending: {prev} is followed by {next}")]
    NotAscending { prev: u64, next: u64 },

    #[error("range widths {a} and {b} are not co-prime (gcd = {gcd})")]
    NotCoprime { a: u64, b: u64, gcd: u64 },

    #[error("remainder scale M must be at least 2, got {0}")]
    ScaleTooSmall(u64),

    #[error("range product overflows 64-bit integers")]
    Overflow,

    #[error("{a} has no inverse modulo {modulus}")]
    NoInverse { a: u64, modulus: u64 },

    #[error("variance at index {index} must be positive and finite, got {value}")]
    InvalidVariance { index: usize, value: f64 },

    #[error("remainder at index {index} is {value}, outside [0, {modulus})")]
    RemainderOutOfRange {
        index: usize,
        value: f64,
        modulus: f64,
    },

    #[error("expected {expected} {what}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("search step {step} outside (0, {max}]")]
    InvalidSearchStep { step: f64, max: f64 },

    #[error("Zadoff-Chu root {root} is not co-prime with length {length}")]
    InvalidZcRoot { root: u64, length: usize },

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("segment index {index} out of range for {count} segments")]
    SegmentOutOfRange { index: usize, count: usize },

    #[error("undefined phase: correlation is zero")]
    UndefinedPhase,

    #[error("SNR must be positive, got {0}")]
    InvalidSnr(f64),

    #[error("{name} = {value} outside {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no feasible configuration for N = {n_fft} with K in {k:?}")]
    NoFeasibleConfiguration { n_fft: usize, k: Vec<usize> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit status for the command-line front end: 2 for bad input,
    /// 1 for a computation that cannot be carried out.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoFeasibleConfiguration { .. } | Error::UndefinedPhase | Error::Overflow => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
