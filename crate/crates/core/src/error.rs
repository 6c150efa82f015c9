use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid material: {}", .0.join("; "))]
    Material(Vec<String>),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("cannot parse expression {expr:?}: {reason}")]
    Expression { expr: String, reason: String },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("inner plastic iteration did not converge at t = {time}: residual {residual:.3e} after {iterations} iterations")]
    InnerNotConverged {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("monolithic Newton solve failed at step {step}: {reason}")]
    Oracle { step: usize, reason: String },

    #[error("oracle problem too large: {unknowns} unknowns (limit {limit})")]
    OracleTooLarge { unknowns: usize, limit: usize },

    #[error("manufactured solution setup: {0}")]
    Manufactured(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures of the numerical solvers as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::LinearSolver(_) | Error::InnerNotConverged { .. } | Error::Oracle { .. }
        )
    }
}
