use thiserror::Error;

/// Errors raised by the library. The CLI maps each category to an exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid entry {text:?}: {reason}")]
    BadEntry { text: String, reason: String },
    #[error("duplicate singular point at {0}")]
    DuplicatePoint(String),
    #[error("leading tail matrix of point {0} is zero")]
    ZeroLeadingMatrix(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("declared data at infinity disagrees with the finite data: {0}")]
    InfinityMismatch(String),

    #[error("unknown singular point {0}")]
    UnknownPoint(String),
    #[error("point {point} is not {expected}")]
    WrongPointKind { point: String, expected: &'static str },
    #[error("infinity has Poincare rank {0} (polynomial part present)")]
    InfinityIrregular(usize),
    #[error("matrix dimension {0} exceeds the supported limit of 16")]
    TooLarge(usize),
    #[error("exact arithmetic required: {0}")]
    ExactRequired(&'static str),
    #[error("exponents missing for {0}")]
    MissingExponents(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("evaluation point {0} is too close to a pole")]
    NearPole(String),
    #[error("step size underflow at parameter {0}")]
    StepUnderflow(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::BadEntry { .. }
                | Error::DuplicatePoint(_)
                | Error::ZeroLeadingMatrix(_)
                | Error::DimensionMismatch(_)
                | Error::InfinityMismatch(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NearPole(_) | Error::StepUnderflow(_) | Error::NonFinite(_) | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
