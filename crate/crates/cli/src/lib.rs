//! Command-line workflow around `vstar-core`: CSV ingestion, tests,
//! sequential regime selection, simulation and Monte Carlo experiments.

pub mod args;
pub mod commands;
pub mod ingest;
pub mod report;

use thiserror::Error;

pub use args::{Cli, Command};
pub use commands::run;
pub use ingest::{ingest_csv, write_panel_csv, Ingested, Transform};
pub use report::{ReportBody, ReportDocument, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot open {path}: {reason}")]
    MissingFile { path: String, reason: String },

    #[error("parse error at row {row}, column {col}: {detail}")]
    Parse { row: usize, col: usize, detail: String },

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("missing or non-numeric value at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Usage(String),

    #[error("write failed: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] vstar_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_statistical() => EXIT_STATISTICAL,
            CliError::Core(e) if matches!(e.root(), vstar_core::Error::TooManyFailures { .. }) => EXIT_STATISTICAL,
            _ => EXIT_DATA,
        }
    }
}
