use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure to evaluate a component function at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Expression syntax or resolution error. `offset` is a byte offset into the
/// source text; `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at line {line}, column {column}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("invalid rotation matrix: {0}")]
    Matrix(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (best residual {best_residual:?})")]
    NoConvergence { iterations: usize, best_residual: f64 },
    #[error("{path}: {source}")]
    Definition {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("catalog: {0}")]
    Catalog(String),
}
