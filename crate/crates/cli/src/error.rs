use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NO_ANSWER: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rcp_core::Error),

    #[error("invalid {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use rcp_core::Error as E;
        match self {
            CliError::Core(E::Validation { .. }) | CliError::Config { .. } => EXIT_VALIDATION,
            CliError::Core(E::Bracket { .. } | E::Undecidable { .. } | E::Divergent { .. }) => EXIT_NO_ANSWER,
            CliError::Core(E::Resource(_)) | CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Pool(_) => EXIT_VALIDATION,
        }
    }
}
