use std::path::PathBuf;

use crate::schema::ValidationReport;
use crate::table::CellAddress;

/// Errors surfaced by the library. Schema-invariant violations are not
/// errors; they are collected into a [`ValidationReport`] instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: line {line} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{path}: duplicate column `{column}`")]
    DuplicateColumn { path: PathBuf, column: String },

    #[error("unknown column `{column}`")]
    UnknownColumn { column: String },

    #[error("row index {row} out of bounds ({rows} rows)")]
    RowOutOfBounds { row: usize, rows: usize },

    #[error("schema config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("unknown parameter `{parameter}` in hierarchy `{hierarchy}`")]
    UnknownParameter {
        hierarchy: String,
        parameter: String,
    },

    #[error("attribute `{attribute}` is neither a parameter nor a weak attribute of hierarchy `{hierarchy}`")]
    UnknownHierarchyAttribute {
        hierarchy: String,
        attribute: String,
    },

    #[error("`{attribute}` is the identifier level of hierarchy `{hierarchy}` and cannot be imputed")]
    IdentifierTarget {
        hierarchy: String,
        attribute: String,
    },

    #[error("`{weak}` is not a weak attribute of parameter `{parameter}` in hierarchy `{hierarchy}`")]
    NotWeakAttribute {
        hierarchy: String,
        parameter: String,
        weak: String,
    },

    #[error("unknown dimension `{dimension}`")]
    UnknownDimension { dimension: String },

    #[error("dimension `{dimension}` has no hierarchy `{hierarchy}`")]
    UnknownHierarchy {
        dimension: String,
        hierarchy: String,
    },

    #[error("schema validation failed:\n{0}")]
    InvalidSchema(ValidationReport),

    #[error("cross-dimension link is stale: {detail}")]
    StaleLink { detail: String },

    #[error(
        "attribute `{attribute}` of dimension `{dimension}` is not eligible for injection: \
         identifier values are unique, so only parameters at granularity level 2 or higher \
         and weak attributes at level 1 or higher can be completed"
    )]
    IneligibleAttribute {
        dimension: String,
        attribute: String,
    },

    #[error("missing rate {rate} out of range: must be in (0, 1]")]
    RateOutOfRange { rate: f64 },

    #[error("fill at {address:?} does not correspond to an injected cell")]
    ProtocolViolation { address: CellAddress },

    #[error("inconsistent synthetic spec: {message}")]
    SyntheticSpec { message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
