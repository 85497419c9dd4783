use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum FhsError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("covariate {index} = {value} lies outside the basis domain [{lo}, {hi}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("rank-deficient matrix: {deficient} of {cols} columns are linearly dependent")]
    RankDeficient { deficient: usize, cols: usize },

    #[error("null space not nested: the null design is not contained in the spline span (relative residual {residual:.3e})")]
    NotNested { residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure in {context} at iteration {iteration}")]
    NumericalFailure { context: String, iteration: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FhsError {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            FhsError::InvalidConfig(_) | FhsError::InvalidBasis(_) => 2,
            FhsError::Data(_)
            | FhsError::Csv(_)
            | FhsError::Io(_)
            | FhsError::OutOfDomain { .. }
            | FhsError::DimensionMismatch(_) => 3,
            FhsError::RankDeficient { .. }
            | FhsError::NotNested { .. }
            | FhsError::NumericalFailure { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, FhsError>;
