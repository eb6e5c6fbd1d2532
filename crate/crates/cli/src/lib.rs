//! Driver for the `csd1d` binary: configuration, the `solve`, `verify` and
//! `convergence` commands, and their CSV/JSON artifacts.

pub mod config;
pub mod convergence;
pub mod output;
pub mod solve;
pub mod verify;

use csd1d_core::CsdError;
use thiserror::Error;

pub use config::RunConfig;
pub use convergence::run_convergence;
pub use solve::run_solve;
pub use verify::{run_verify, Suite, VerifyOptions};

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    /// At least one requested check or verify row failed.
    ChecksFailed,
    /// Bad configuration, arguments or unknown suite.
    Usage,
    ConvergenceFailure,
    DomainOverflow,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Success => 0,
            Exit::ChecksFailed => 1,
            Exit::Usage => 2,
            Exit::ConvergenceFailure => 3,
            Exit::DomainOverflow => 4,
        }
    }

    pub fn for_error(e: &CsdError) -> Exit {
        match e {
            CsdError::InvalidArgument(_) | CsdError::GridMismatch => Exit::Usage,
            CsdError::ConvergenceFailure { .. } | CsdError::SlabUnderflow { .. } => Exit::ConvergenceFailure,
            CsdError::DomainOverflow { .. } => Exit::DomainOverflow,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] CsdError),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Core(e) => Exit::for_error(e),
            _ => Exit::Usage,
        }
    }
}
