use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GtkvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("context mismatch: {left} vs {right}")]
    ContextMismatch { left: String, right: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("not in the image of the tilde-coproduct; residual {residual}")]
    NotInImage { residual: String },

    #[error("wrong context: {0}")]
    WrongContext(String),

    #[error("unreachable framing: {0}")]
    UnreachableFraming(String),

    #[error("solver obstruction at degree {degree}: {detail}")]
    Obstruction { degree: usize, detail: String },

    #[error("duflo mismatch: {0}")]
    DufloMismatch(String),
}

pub type Result<T> = std::result::Result<T, GtkvError>;
