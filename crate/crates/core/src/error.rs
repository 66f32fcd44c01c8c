use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported register size {0} (supported: 1..=12 qubits)")]
    QubitCount(usize),

    #[error("invalid qubit index {index} for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),

    #[error("gate {kind:?} expects {expected} target(s), got {got}")]
    GateArity {
        kind: crate::statevector::GateKind,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("ragged input: row {row} has width {got}, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("kernel matrix is not symmetric: |K[{i}][{j}] - K[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("label {value:?} at row {row} is not 0 or 1")]
    BadLabel { row: usize, value: String },

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),

    #[error(
        "insufficient class counts: need >= {need_normal} normal and >= {need_anomalous} anomalous rows, \
         have {normal} normal and {anomalous} anomalous"
    )]
    InsufficientClasses {
        need_normal: usize,
        need_anomalous: usize,
        normal: usize,
        anomalous: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

/// Attaches a pipeline stage name to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Validates a non-empty, rectangular row set and returns its width.
pub(crate) fn check_rows(rows: &[Vec<f64>], what: &'static str) -> Result<usize> {
    let first = rows.first().ok_or(Error::Empty(what))?;
    let width = first.len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Ragged {
                row,
                expected: width,
                got: r.len(),
            });
        }
    }
    Ok(width)
}
