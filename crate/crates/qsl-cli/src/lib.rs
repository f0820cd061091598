//! Harness layer over `qsl-core`: the randomized bound-comparison
//! experiment, the verification suites, and the report serialization the
//! CLI exposes.

pub mod experiment;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trial with stream id {stream} failed: {source}")]
    Trial {
        stream: u64,
        source: qsl_core::Error,
    },

    #[error(transparent)]
    Core(#[from] qsl_core::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// CLI exit code: 2 for input problems, 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            Self::Trial { source, .. } => source,
            Self::Core(e) => e,
            Self::Io(_) => return 2,
        };
        match core {
            qsl_core::Error::NonConvergence { .. } | qsl_core::Error::EigNonConvergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
