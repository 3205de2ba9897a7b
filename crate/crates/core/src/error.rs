use std::fmt;

/// Coarse classification used for exit codes and machine-readable reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    InvalidInput,
    Truncation,
    Numerical,
    Convention,
    Quadrature,
    Search,
    Unsupported,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::InvalidInput => "invalid-input",
            ErrorCategory::Truncation => "truncation",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Convention => "convention",
            ErrorCategory::Quadrature => "quadrature",
            ErrorCategory::Search => "search",
            ErrorCategory::Unsupported => "unsupported",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("truncation deficit {deficit:.3e} exceeds tolerance {tolerance:.3e} ({context})")]
    Truncation {
        deficit: f64,
        tolerance: f64,
        context: String,
    },
    #[error("numerical consistency: {0}")]
    Numerical(String),
    #[error("beam-splitter convention: {0}")]
    Convention(String),
    #[error("quadrature did not converge: change {change:.3e} on doubling nodes")]
    Quadrature { change: f64 },
    #[error("search failed: {0}")]
    Search(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidInput(_) => ErrorCategory::InvalidInput,
            Error::Truncation { .. } => ErrorCategory::Truncation,
            Error::Numerical(_) => ErrorCategory::Numerical,
            Error::Convention(_) => ErrorCategory::Convention,
            Error::Quadrature { .. } => ErrorCategory::Quadrature,
            Error::Search(_) => ErrorCategory::Search,
            Error::Unsupported(_) => ErrorCategory::Unsupported,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
