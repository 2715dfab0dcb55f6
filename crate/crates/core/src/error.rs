use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range 1..={n_q}")]
    QubitOutOfRange { index: usize, n_q: usize },

    #[error("need at least {min} qubits, got {n_q}")]
    TooFewQubits { n_q: usize, min: usize },

    #[error("qubit count {n_q} exceeds the supported maximum {max}")]
    TooManyQubits { n_q: usize, max: usize },

    #[error("invalid sampling spec: {0}")]
    InvalidSpec(String),

    #[error("invalid entanglement matrix: {0}")]
    InvalidMatrix(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("control and target are both qubit {0}")]
    SelfEntanglement(usize),

    #[error("gate is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
