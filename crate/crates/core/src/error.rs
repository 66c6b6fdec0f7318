use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("birth time {birth} exceeds the rescaling horizon {horizon}")]
    BirthAfterHorizon { birth: f64, horizon: f64 },

    #[error("the two vertices have equal birth times ({0})")]
    EqualAges(f64),

    #[error("edge coin requested for a pair with identical ids ({0})")]
    EqualIds(usize),

    #[error("negative profile argument {0}")]
    NegativeArgument(f64),

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("malformed graph file, line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
