use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis configuration: r = {r}, q = {q} (both must be at least 1)")]
    InvalidConfig { r: usize, q: usize },

    #[error("t = {t} lies outside the half-open domain [0, 1)")]
    OutOfDomain { t: f64 },

    #[error("vector length {got} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular: LU pivot magnitude {pivot:e} below threshold")]
    Singular { pivot: f64 },

    #[error("Newton step {iteration}: Jacobian is singular")]
    SingularJacobian { iteration: usize },

    #[error("derivative of order {order} needs {order} initial-condition vectors, got {got}")]
    MissingInitialConditions { order: usize, got: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("malformed problem file: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("malformed CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
