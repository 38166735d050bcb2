use thiserror::Error;

/// Failure classes shared by every module.
///
/// The CLI maps these onto exit codes: `Input`, `Precondition` and `Resource`
/// are caller problems (exit 2), `Invariant` means a proven property did not
/// hold at runtime (exit 3).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Precondition(_) => "precondition",
            Error::Resource(_) => "resource",
            Error::Invariant(_) => "invariant",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Input(m) | Error::Precondition(m) | Error::Resource(m) | Error::Invariant(m) => m,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(format!($($arg)*)) };
}
macro_rules! invariant_err {
    ($($arg:tt)*) => { $crate::error::Error::Invariant(format!($($arg)*)) };
}
macro_rules! precondition_err {
    ($($arg:tt)*) => { $crate::error::Error::Precondition(format!($($arg)*)) };
}
pub(crate) use input_err;
pub(crate) use invariant_err;
pub(crate) use precondition_err;
