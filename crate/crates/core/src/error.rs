use std::path::PathBuf;

use crate::lasso::LassoFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),

    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("design has no columns")]
    NoColumns,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("index {index} out of range for dimension {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("invalid penalty: {0}")]
    InvalidLambda(String),

    #[error("ridge penalty must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "solver did not converge at lambda = {lambda} within {sweeps} sweeps (kkt residual {kkt_residual:e})"
    )]
    NotConverged {
        lambda: f64,
        sweeps: usize,
        kkt_residual: f64,
        best: Box<LassoFit>,
    },

    #[error(
        "dual point infeasible: max |X_j^T theta| = {max_correlation} exceeds lambda = {lambda}"
    )]
    InfeasibleDual { max_correlation: f64, lambda: f64 },

    #[error("dual active set undefined at lambda = 0")]
    DegenerateLambda,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricInput(f64),

    #[error("C11 is singular (condition number {0:e}); use the PIC check")]
    SingularC11(f64),

    #[error("more than {0} candidate submatrices")]
    CombinatorialBlowup(usize),

    #[error("sign vector must be nonzero on every active index (index {0})")]
    InvalidSigns(usize),

    #[error("support is empty")]
    EmptySupport,

    #[error("selection is empty")]
    EmptySelection,

    #[error("true support is empty")]
    EmptyTruth,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),

    #[error("covariance is not positive semi-definite")]
    NotPsd,

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::InfeasibleDual { .. }
                | Error::SingularC11(_)
                | Error::CombinatorialBlowup(_)
                | Error::NotPsd
        )
    }
}
