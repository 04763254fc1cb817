use thiserror::Error;

pub type Result<T> = std::result::Result<T, BmfError>;

#[derive(Debug, Error)]
pub enum BmfError {
    #[error("dimension mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("trivial input: X has empty support")]
    EmptySupport,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error(
        "missing value {token:?} at row {row}, column {col}; remove rows with missing data before factorizing"
    )]
    MissingValue {
        row: usize,
        col: usize,
        token: String,
    },

    #[error("search space of 2^{log2_size} candidates exceeds budget {budget}")]
    BudgetExceeded { log2_size: u32, budget: u64 },

    #[error("generation failed after {attempts} attempts: {context}")]
    RetriesExhausted { attempts: usize, context: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BmfError {
    pub(crate) fn shape(
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        BmfError::ShapeMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }
}
