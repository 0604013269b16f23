use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum KpError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("diagnostic error: {0}")]
    Diagnostic(String),
    #[error("eigensolver error: {0}")]
    Eigen(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl KpError {
    /// Stable machine-readable category tag, used in CLI error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            KpError::Config(_) => "config",
            KpError::Dimension(_) => "dimension",
            KpError::Solver(_) => "solver",
            KpError::Diagnostic(_) => "diagnostic",
            KpError::Eigen(_) => "eigen",
            KpError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, KpError>;
