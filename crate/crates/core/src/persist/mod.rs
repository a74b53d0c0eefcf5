//! On-disk formats: binary checkpoints, metrics CSV and run configuration files.

mod checkpoint_file;
mod csv;
mod run_config;

use std::path::Path;

use thiserror::Error;

pub use checkpoint_file::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC, VERSION};
pub use csv::{
    format_sig9, parse_metrics_csv, read_metrics_csv, render_metrics_csv, render_report_csv, write_metrics_csv,
    METRICS_HEADER,
};
pub use run_config::{
    default_arch, parse_config, parse_config_str, DatasetKind, DatasetSpec, PhaseOverrides, RunConfig,
};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint truncated: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("tensor dimensions overflow")]
    DimensionOverflow,
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("checkpoint text is not valid UTF-8")]
    InvalidUtf8,
    #[error("checkpoint architecture: {0}")]
    Descriptor(String),
    #[error("invalid provenance entry `{0}`")]
    InvalidProvenance(String),
    #[error("refusing to serialize non-finite value {0}")]
    NonFinite(String),
    #[error("metrics CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("missing required key `{key}`{}", line.map(|l| format!(" (needed by line {l})")).unwrap_or_default())]
    MissingKey { key: String, line: Option<usize> },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PersistError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PersistError::Io { path: path.display().to_string(), source }
    }
}
