use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

/// Pipeline stage names, used to label errors and partial reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Load,
    Fit,
    Transform,
    Classify,
    Equilibria,
    Stability,
    Phase,
    Mape,
    Convergence,
    Sobol,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{source_name}: row {row}, column '{column}': {message}")]
    Parse { source_name: String, row: usize, column: String, message: String },
    #[error("[{stage}] validation error: {message}")]
    Validation { stage: Stage, message: String },
    #[error("[{stage}] numerical failure: {source}")]
    Numerical { stage: Stage, source: lvdyn_core::Error },
    #[error("[{stage}] I/O error on {}: {source}", path.display())]
    Io { stage: Stage, path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn validation(stage: Stage, message: impl Into<String>) -> Self {
        CliError::Validation { stage, message: message.into() }
    }

    pub fn io(stage: Stage, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { stage, path: path.into(), source }
    }

    /// Wrap a core error, sorting it into bad input or failed numerics.
    pub fn from_core(stage: Stage, e: lvdyn_core::Error) -> Self {
        use lvdyn_core::Error as E;
        match e {
            E::InsufficientData { .. }
            | E::NonPositiveValue { .. }
            | E::NonConsecutiveYears { .. }
            | E::LengthMismatch { .. }
            | E::InvalidBBox(_)
            | E::InvalidArgument(_)
            | E::ZeroBaseline(_)
            | E::InvalidN(_) => CliError::Validation { stage, message: e.to_string() },
            other => CliError::Numerical { stage, source: other },
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            CliError::Parse { .. } => Stage::Load,
            CliError::Validation { stage, .. } | CliError::Numerical { stage, .. } | CliError::Io { stage, .. } => {
                *stage
            }
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach a stage label to core results.
pub trait StageExt<T> {
    fn at(self, stage: Stage) -> CliResult<T>;
}

impl<T> StageExt<T> for lvdyn_core::Result<T> {
    fn at(self, stage: Stage) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}
