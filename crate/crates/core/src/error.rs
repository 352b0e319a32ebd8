use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} out of range 1..={max} for {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("SDP solver failed{context}: {reason}")]
    Solver { context: String, reason: String },
    #[error("observed data are infeasible: {0}")]
    InfeasibleData(String),
    #[error("singular probe set (condition number {0:.3e})")]
    SingularProbes(f64),
    #[error("empty count data: {0}")]
    EmptyCounts(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn solver(context: impl Into<String>, reason: impl Into<String>) -> Self {
        let context = context.into();
        Error::Solver {
            context: if context.is_empty() {
                context
            } else {
                format!(" ({context})")
            },
            reason: reason.into(),
        }
    }
}
