use thiserror::Error;

/// Unified error type for every fallible operation in this crate.
///
/// String payloads carry context (which entry, which exponent, which digit)
/// so callers and the CLI can report failures without re-deriving state.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by an element that is zero to working precision")]
    DivisionByZeroPrecision,

    #[error("operand ring or window mismatch: {0}")]
    SpecMismatch(String),

    #[error("matrix is not integral: {0}")]
    NotIntegral(String),

    #[error("element is not invertible: {0}")]
    NotInvertible(String),

    #[error("working precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("slope data did not stabilize: {0}")]
    NotStabilized(String),

    #[error("residue equation has no solution: {0}")]
    ResidueUnsolvable(String),

    #[error("unit coefficient of the twist equation must have constant residue: {0}")]
    NonConstantResidue(String),

    #[error("iteration made no progress: {0}")]
    NonConvergent(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graded part is not supported on the monomial lattice: {0}")]
    NoGrading(String),

    #[error("rounding changed the element beyond tolerance: {0}")]
    RoundingTooCoarse(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),

    #[error("iteration limit exceeded: {0}")]
    MaxIterExceeded(String),

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("profile constraint violated: {0}")]
    ProfileViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code contract: 2 for malformed input, 1 for honest algorithmic
    /// failure on well-formed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParseError(_)
            | Error::ProfileViolation(_)
            | Error::SpecMismatch(_)
            | Error::InvalidInput(_)
            | Error::NotIntegral(_) => 2,
            _ => 1,
        }
    }
}
