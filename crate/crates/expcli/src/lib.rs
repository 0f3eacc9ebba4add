//! Batch experiments on top of `nbsm-core`: TOML experiment files in,
//! byte-stable JSON reports and CSV tables out.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{ExperimentFile, ExperimentSpec, Kind, Overrides};
pub use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid experiment file: {0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
    #[error("cannot compare a {0} report with a {1} report")]
    KindMismatch(String, String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] nbsm_core::Error),
}

impl CliError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Field { field: field.into(), reason: reason.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_owned(), source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
