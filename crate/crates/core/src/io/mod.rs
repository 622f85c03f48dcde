//! Case files, solution dumps and report tables.
//!
//! A case is one JSON document shaped like [`CaseDefinition`]. Any time
//! series may be given inline as `[[scenario 1...], ...]` or as
//! `{"csv": "relative/path.csv"}`: one row per period, one column per
//! scenario, header row mandatory.

mod case;
mod report;
mod solution;

pub use case::{load_case, load_case_str, save_case, KeyPolicy, LoadedCase, SeriesStorage};
pub use report::{emit_report, fmt_num, verify_manifest, RunManifest, FILES};
pub use solution::{load_solution, write_solution, SolutionMeta};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clearing::ClearingError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: at `{at}`: {message}")]
    Schema { path: PathBuf, at: String, message: String },
    #[error("{path}: missing CSV file {csv}")]
    MissingCsv { path: PathBuf, csv: PathBuf },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: expected {expected} rows (one per period), found {found}")]
    Length { path: PathBuf, expected: usize, found: usize },
    #[error("{path}: unknown keys: {}", .keys.join(", "))]
    UnknownKeys { path: PathBuf, keys: Vec<String> },
    #[error("{path}: hash mismatch for {file}")]
    HashMismatch { path: PathBuf, file: String },
    #[error(transparent)]
    Clearing(#[from] ClearingError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

#[cfg(test)]
mod tests;
