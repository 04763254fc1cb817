use banmf_core::BmfError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] BmfError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const BUDGET: i32 = 3;
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => exit::USAGE,
            HarnessError::Core(e) => Self::exit_code_for(e),
            _ => exit::DATA,
        }
    }

    pub fn exit_code_for(e: &BmfError) -> i32 {
        match e {
            BmfError::InvalidParameter(_) => exit::USAGE,
            BmfError::BudgetExceeded { .. } => exit::BUDGET,
            _ => exit::DATA,
        }
    }
}
