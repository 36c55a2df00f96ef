use std::fmt;

/// Which side a monicity condition refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Right => f.write_str("right"),
            Side::Left => f.write_str("left"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime^k spec")]
    BadFieldSpec(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field {p}^{k} is too large (order must stay below 2^62)")]
    FieldTooLarge { p: u64, k: usize },
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("coefficient `{0}` is not in the field")]
    BadCoefficient(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("linear matrix is a unit")]
    Unit,
    #[error("linear matrix is not full")]
    NotFull,
    #[error("linear matrix is not {0} monic")]
    NotMonic(Side),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("random search exhausted: {0}")]
    Exhausted(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("malformed document: {0}")]
    Format(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
