use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("matrix is not a {expected} (tolerance {tol:e})")]
    WrongKind { expected: &'static str, tol: f64 },
    #[error("rate digraph is not strongly connected")]
    NotIrreducible,
    #[error("kernel vector has a non-positive entry ({0:e})")]
    NoPositiveSolution(f64),
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("duality matrix has an imaginary part of size {0:e}")]
    ComplexResidue(f64),
    #[error("function {index} is not an eigenfunction (residual {residual:e})")]
    NotEigenpair { index: usize, residual: f64 },
    #[error("eigenvalue {0} is real; use the real tensor construction")]
    NotConjugateClosed(f64),
    #[error("functions do not form a Jordan chain (residual {residual:e} at order {order})")]
    NotChain { order: usize, residual: f64 },
    #[error("family is not orthonormal in L2(mu) (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("families are not bi-orthogonal (deviation {0:e})")]
    NotBiorthogonal(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("configuration space has {size} states, cap is {cap}")]
    SpaceTooLarge { size: u128, cap: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("hypergeometric denominator vanished at term {0}")]
    DegenerateHypergeometric(usize),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
