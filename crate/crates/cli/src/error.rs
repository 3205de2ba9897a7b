use std::fmt;

use vpem_core::ErrorCategory;

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration; `field` names the offending key.
    Config { field: String, message: String },
    Io(String),
    Core(vpem_core::Error),
}

impl Failure {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Failure::Config { .. } => "config",
            Failure::Io(_) => "io",
            Failure::Core(e) => e.category().as_str(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config { .. } => 2,
            Failure::Io(_) => 3,
            Failure::Core(e) => match e.category() {
                ErrorCategory::InvalidInput => 4,
                ErrorCategory::Truncation => 5,
                ErrorCategory::Numerical => 6,
                ErrorCategory::Convention => 7,
                ErrorCategory::Quadrature => 8,
                ErrorCategory::Search => 9,
                ErrorCategory::Unsupported => 10,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config { field, message } => write!(f, "{field}: {message}"),
            Failure::Io(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<vpem_core::Error> for Failure {
    fn from(e: vpem_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Failure>;
