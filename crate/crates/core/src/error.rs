use std::fmt;

/// Errors produced by constructors, verifiers, and the iteration engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A piecewise-linear function failed validation.
    InvalidFunction(String),
    /// An interval set failed validation.
    InvalidIntervalSet(String),
    /// Exponent outside (1, inf).
    InvalidExponent(f64),
    /// A resampling grid was not strictly increasing (or too short).
    NonMonotoneGrid,
    /// The operation requires a continuous function and the input has jumps.
    DiscontinuousFunction(&'static str),
    /// The operation requires a nonempty input with positive mass.
    EmptyInput(&'static str),
    /// A parameter was outside its documented range.
    InvalidParameter(String),
    /// A truncation window or iteration budget cannot be satisfied.
    NumericBudget(String),
    /// Unknown extremizer-search family name.
    UnknownFamily(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidFunction(msg) => write!(f, "invalid piecewise-linear function: {msg}"),
            Error::InvalidIntervalSet(msg) => write!(f, "invalid interval set: {msg}"),
            Error::InvalidExponent(p) => write!(f, "exponent must satisfy p > 1, got {p}"),
            Error::NonMonotoneGrid => write!(f, "grid must be strictly increasing with >= 2 points"),
            Error::DiscontinuousFunction(op) => {
                write!(f, "{op} requires a continuous function (no jumps)")
            }
            Error::EmptyInput(op) => write!(f, "{op} requires a nonempty input with positive mass"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NumericBudget(msg) => write!(f, "numeric budget exceeded: {msg}"),
            Error::UnknownFamily(name) => write!(f, "unknown search family: {name}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
