use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes. Each class maps onto one process exit code so batch
/// runs can tell them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: String,
        requested: usize,
        cap: usize,
    },

    #[error("overflow: |beta*J| = {value} exceeds cap {cap}")]
    Overflow { value: f64, cap: f64 },

    #[error("verification failed ({check}): {detail}")]
    Verification { check: String, detail: String },

    #[error("no embedding found: {0}")]
    NoEmbedding(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn verification(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Verification {
            check: check.into(),
            detail: detail.into(),
        }
    }

    pub fn resource(what: impl Into<String>, requested: usize, cap: usize) -> Self {
        Error::Resource {
            what: what.into(),
            requested,
            cap,
        }
    }

    /// 1 = usage/input, 2 = resource, 3 = verification, 4 = non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Unsupported(_) | Error::Io(_) | Error::Json(_) => 1,
            Error::Resource { .. } | Error::Overflow { .. } => 2,
            Error::Verification { .. } | Error::NoEmbedding(_) => 3,
            Error::Convergence { .. } => 4,
        }
    }
}
