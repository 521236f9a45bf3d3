use std::path::PathBuf;

use rhs_spectra_core::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DOMAIN: i32 = 3;
    pub const QUADRATURE: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{op}({inputs}): {source}")]
    Math {
        op: &'static str,
        inputs: String,
        source: Error,
    },
    #[error("verification failed: {failed} of {total} checks")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => exit::CONFIG,
            CliError::VerifyFailed { .. } => exit::VERIFY_FAILED,
            CliError::Math { source, .. } => match source {
                Error::InvalidConfig { .. } => exit::CONFIG,
                Error::QuadratureFailure { .. }
                | Error::ExtrapolationFailure { .. }
                | Error::CutoffTooSmall { .. }
                | Error::NumericalInconsistency { .. } => exit::QUADRATURE,
                _ => exit::DOMAIN,
            },
        }
    }
}

/// Attaches the operation name and its inputs to a library error.
pub trait Context<T> {
    fn during(self, op: &'static str, inputs: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn during(self, op: &'static str, inputs: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Math {
            op,
            inputs: inputs(),
            source,
        })
    }
}
