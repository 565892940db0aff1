use thiserror::Error;

/// Errors raised on malformed inputs. Verification outcomes are reported
/// through report structs, not through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("support mismatch: {left} vs {right} points")]
    SupportMismatch { left: usize, right: usize },
    #[error("flow length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("empty sample after exclusion")]
    EmptySample,
    #[error("time index {t} out of range for horizon {horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("conditioning on a zero-probability event: {0}")]
    ZeroProbability(String),
    #[error("deviation undefined at {0}")]
    UndefinedDeviation(String),
    #[error("no kernel entry for measure {0}")]
    UnknownMeasure(String),
    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
