use thiserror::Error;

use crate::spinops::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin index {index} out of range for a system with {spins} spins")]
    SpinIndex { index: usize, spins: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operator dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty spin subset")]
    EmptySubset,

    #[error("degenerate ancilla transitions: {a} and {b} are {gap:.4} Hz apart (resolution {resolution} Hz)")]
    DegenerateTransitions {
        a: String,
        b: String,
        gap: f64,
        resolution: f64,
    },

    #[error("state is not diagonal (off-diagonal magnitude {0:.3e})")]
    NotDiagonal(f64),

    #[error("gradient events have no unitary representation")]
    GradientNotUnitary,

    #[error("empty pulse sequence")]
    EmptySequence,

    #[error("transition at {freq_hz:.4} Hz folds outside the spectral window (±{nyquist_hz:.4} Hz around reference)")]
    SpectralFold { freq_hz: f64, nyquist_hz: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no peaks above {threshold:.3e} in the absorption spectrum")]
    NoPeaks { threshold: f64 },

    #[error("peak at {freq_hz:.4} Hz lies within tolerance of both {a} and {b}")]
    AmbiguousAssignment { freq_hz: f64, a: String, b: String },

    #[error("two peaks claim register state {0}")]
    DuplicateAssignment(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid spin system: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid bitstring {0:?}")]
    Bitstring(String),

    #[error("unknown {kind} {name:?} (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("unsupported by {backend}: {reason}")]
    Unsupported {
        backend: &'static str,
        reason: String,
    },

    #[error("oracle applied {0} times; the experiment permits exactly one query")]
    QueryCount(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
