use thiserror::Error;

pub type Result<T> = std::result::Result<T, FslpError>;

#[derive(Debug, Error)]
pub enum FslpError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("non-finite value in nonlinear residual at output index {index}")]
    NonFiniteEvaluation { index: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid OCP specification: {0}")]
    InvalidSpec(String),

    #[error("feasible initialization failed at stage {stage}: {reason}")]
    Initialization { stage: usize, reason: String },

    #[error("trace too short: need at least {needed} iterates, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    #[error("malformed LP dump at line {line}: {reason}")]
    LpDump { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FslpError::Dimension {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
