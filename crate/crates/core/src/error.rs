use core::fmt;

use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    InvalidInput(String),
    /// Two inputs disagree on a dimension.
    Shape { what: &'static str, expected: usize, found: usize },
    /// The trajectory step does not fit inside the area.
    DegenerateTrajectory,
    /// The UE coincides with an AP position.
    SingularGeometry,
    /// A channel matrix that must carry energy is identically zero.
    ZeroChannel,
    /// The labeled chart points do not span the plane.
    DegenerateLabels,
    /// No (anchor, close, far) triple satisfies the coherence-time condition.
    NoValidTriplet,
    /// A quantity required by a metric is degenerate (zero stress denominator,
    /// zero joint entropy, ...).
    Numerical(&'static str),
    /// The dataset carries no ground-truth positions.
    MissingPositions,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Shape { what, expected, found } => {
                write!(f, "shape mismatch for {what}: expected {expected}, found {found}")
            }
            Error::DegenerateTrajectory => f.write_str("degenerate trajectory"),
            Error::SingularGeometry => f.write_str("singular geometry"),
            Error::ZeroChannel => f.write_str("zero channel"),
            Error::DegenerateLabels => f.write_str("degenerate label geometry"),
            Error::NoValidTriplet => f.write_str("no valid triplet for the coherence time"),
            Error::Numerical(what) => write!(f, "numerical failure: {what}"),
            Error::MissingPositions => f.write_str("dataset has no ground-truth positions"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
