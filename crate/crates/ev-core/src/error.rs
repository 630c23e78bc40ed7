//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = EvError> = std::result::Result<T, E>;

/// Everything that can go wrong across the valuation pipeline.
#[derive(Debug, Error)]
pub enum EvError {
    #[error("matrix entry ({row},{col}) breaks symmetry: {left} vs {right}")]
    NotSymmetric {
        row: usize,
        col: usize,
        left: f64,
        right: f64,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("column {col} has mean {mean:e} but the centering tolerance is {tol:e}; center the data first")]
    NotCentered { col: usize, mean: f64, tol: f64 },

    #[error("eigensolver did not converge within {iters} iterations")]
    NoConvergence { iters: usize },

    #[error("Rayleigh quotient of the zero vector is undefined")]
    ZeroVector,

    #[error("covariance is numerically singular (lambda_min = {lambda_min:e}); a ridge of about {suggested_ridge:e} would regularize it")]
    SingularCovariance {
        lambda_min: f64,
        suggested_ridge: f64,
        /// Leave-one-out index that produced the singular matrix, when known.
        point: Option<usize>,
    },

    #[error("baseline scores are constant (std = {std:e}); cannot standardize against them")]
    DegenerateBase { std: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("validation set is empty")]
    EmptyValidation,

    #[error("exact Shapley enumeration supports at most {limit} points, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("row {row} has (near-)zero norm and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("bad magic bytes {found:02x?}; not an EVDS file")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported EVDS version {found}")]
    BadVersion { found: u16 },

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },

    #[error("label {label} at point {index} is out of range for {classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: u32,
        classes: usize,
    },

    #[error("line {line}: expected {expected} fields, got {got}")]
    RaggedRows {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("line {line}: cannot parse field {field:?}")]
    ParseField { line: usize, field: String },

    #[error("shift too strong: PSD repair changed the perturbation norm from {requested:e} to {applied:e}")]
    InfeasibleShift { requested: f64, applied: f64 },

    #[error("addition step {step} exceeds pool size {pool}")]
    StepExceedsPool { step: usize, pool: usize },

    #[error("stability protocol needs at least {needed} source points, got {available}")]
    InsufficientSource { needed: usize, available: usize },

    #[error("training bootstrap model {model} failed: {source}")]
    ModelTraining {
        model: usize,
        #[source]
        source: Box<EvError>,
    },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EvError {
    /// Shorthand for precondition violations.
    pub fn invalid(msg: impl Into<String>) -> Self {
        EvError::Invalid(msg.into())
    }
}
