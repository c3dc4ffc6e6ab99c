use alloc::string::String;
use core::fmt;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// Array lengths or indices disagree with the declared dimensions.
    Dimension(String),
    /// A model violates its probabilistic constraints beyond tolerance.
    InvalidModel(String),
    /// A privacy budget or failure probability is out of range.
    InvalidBudget(String),
    /// Any other out-of-range parameter.
    InvalidParameter(String),
    /// A matrix handed to the SPD solver is not symmetric.
    NotSymmetric { asymmetry: f64 },
    /// The privacy ledger does not sum to the configured budget.
    Accounting { declared: f64, target: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            Error::InvalidBudget(msg) => write!(f, "invalid privacy budget: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotSymmetric { asymmetry } => {
                write!(f, "matrix is not symmetric (max |M - M^T| = {asymmetry:e})")
            }
            Error::Accounting { declared, target } => write!(
                f,
                "privacy ledger sums to {declared} but the configured budget is {target}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Dimension(alloc::format!($($arg)*))
    };
}
pub(crate) use dim_err;
