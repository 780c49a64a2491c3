//! Configuration-driven runs of the orthocube toolkit: series moments and
//! fields, reference FD solves, GCI post-processing and a one-shot verify
//! suite. Every run leaves a `report.json` with a checksummed manifest.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{Case, Overrides, Resolved, RunConfig};
pub use report::{Artifacts, Check, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Core(#[from] orthocube::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("input {path}: {message}")]
    Input { path: String, message: String },
}

impl CliError {
    /// 1 for configuration and runtime errors; verification failures are
    /// reported through [`RunReport::pass`] instead.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

core_from!(
    orthocube::TensorError,
    orthocube::SeriesError,
    orthocube::MomentError,
    orthocube::FdError,
    orthocube::GciError
);
