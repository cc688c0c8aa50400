use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between a parameter record and a finished study.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("unstable {mode} system: traffic intensity {intensity:.6} >= 1")]
    Unstable { mode: &'static str, intensity: f64 },

    #[error("phase {phase} out of range 0..{k}")]
    PhaseOutOfRange { phase: usize, k: usize },

    #[error("boundary system is singular (pivot {pivot:.3e}, estimated condition {condition:.3e})")]
    SingularBoundary { pivot: f64, condition: f64 },

    #[error("numerical failure: probability {value:.3e} at state ({level}, {phase}) is negative beyond round-off")]
    NegativeProbability { level: usize, phase: usize, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("expected delay undefined: effective admission rate is zero")]
    UndefinedDelay,

    #[error("infeasible ratio `{ratio}` = {value}: {reason}")]
    InfeasibleRatio { ratio: String, value: f64, reason: String },

    #[error("at theta = {theta}: {source}")]
    AtTheta {
        theta: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }

    /// Strips `AtTheta` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTheta { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for rejected input or instability, 1 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InvalidParam { .. }
            | Error::Unstable { .. }
            | Error::PhaseOutOfRange { .. }
            | Error::InfeasibleRatio { .. }
            | Error::Config(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
