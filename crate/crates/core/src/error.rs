use thiserror::Error;

/// Errors raised by the observable algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PomError {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {defect:.3e})")]
    Hermiticity { defect: f64 },

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    Positivity { eigenvalue: f64 },

    #[error("not a Gram matrix (eigenvalue {eigenvalue:.3e})")]
    NotAGram { eigenvalue: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("function value is not finite at outcome {outcome}")]
    Domain { outcome: f64 },

    #[error("observable is redundant: elements {first} and {second} are proportional")]
    Redundancy { first: usize, second: usize },

    #[error("ambiguous common-element match for element {index} of the first observable")]
    Match { index: usize },

    #[error("phase grid of {bins} bins cannot resolve {dim} Fock levels")]
    Alias { dim: usize, bins: usize },

    #[error("{what}: routes disagree by {gap:.3e}")]
    RouteMismatch { what: String, gap: f64 },

    #[error("invalid observable: {0}")]
    Invalid(String),

    #[error("expression syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("expression references unbound slot `{0}`")]
    UnboundSlot(String),
}

pub type Result<T, E = PomError> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl ToString, found: impl ToString) -> PomError {
    PomError::Shape {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
