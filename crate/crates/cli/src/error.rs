use cohest_core::CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const NON_CONVERGENCE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const ORACLE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("solver stopped with status {status}")]
    NonConvergence { status: String },
    #[error("{failed} of {total} oracle instances failed")]
    Oracle { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn input(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Input { path: path.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NonConvergence { .. } => exit::NON_CONVERGENCE,
            Self::Oracle { .. } => exit::ORACLE,
            Self::Core(CoreError::OracleFailure { .. }) => exit::ORACLE,
            Self::Input { .. } | Self::Core(_) | Self::Io { .. } | Self::Csv(_) => exit::INPUT,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
