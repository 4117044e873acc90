//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors reported by model construction, filtering, tracking, and simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A configuration value violates its documented range.
    InvalidConfig(String),
    /// An input (trace, label vector, index list) is malformed.
    InvalidInput(String),
    /// A filter state or measurement contains non-finite values.
    InvalidState(String),
    /// The innovation covariance is singular or ill-conditioned.
    FilterDivergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::FilterDivergence(msg) => write!(f, "filter divergence: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
