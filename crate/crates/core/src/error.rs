use thiserror::Error;

/// Errors produced by the numerical kernels, the configuration reader and the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("could not bracket the stationary point below {cap:e} (function grows too slowly)")]
    BracketFailure { cap: f64 },

    #[error("singular quadrature did not converge within {levels} subdivision levels")]
    QuadratureDivergence { levels: usize },

    #[error("modular is not finite for any probed scaling")]
    NonFiniteModular,

    #[error("energy is not finite")]
    NonFiniteEnergy,

    #[error("excess g - eps*f still grows over the last decades of t (last two maxima {prev:e} -> {last:e})")]
    DivergenceSuspected { prev: f64, last: f64 },

    #[error("line search failed after {halvings} halvings")]
    LineSearchFailure { halvings: usize },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("semantic error: {0}")]
    Semantic(String),

    #[error("expression domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
