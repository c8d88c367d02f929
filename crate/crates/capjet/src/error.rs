use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: bad snapshot: {reason}")]
    Snapshot { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] capjet_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Config(_) => "config",
            CliError::Snapshot { .. } => "snapshot",
            CliError::Core(e) => core_kind(e),
        }
    }

    /// One-line machine-readable description.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

fn core_kind(e: &capjet_core::Error) -> &'static str {
    use capjet_core::Error::*;
    match e {
        OddPointCount(_) | TooFewPoints(_) | NonpositiveHalfPeriod(_) | InvalidParameter(_) => "validation",
        NonFinite => "non_finite",
        LengthMismatch { .. } | GridMismatch => "shape",
        NonHermitianMultiplier { .. } => "non_hermitian",
        NonpositiveRadius { .. } | StepRejected { .. } => "pinch_off",
        NoConvergence { .. } => "no_convergence",
        WindowTooShort { .. } => "window_too_short",
        Overflow { .. } => "overflow",
        NonRealOutput { .. } => "non_real",
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
