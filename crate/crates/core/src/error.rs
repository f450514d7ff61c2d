use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("truncation order {order} exceeded (requested {requested})")]
    TruncationExceeded { order: usize, requested: usize },

    #[error("value {0} outside the allowed domain {1}")]
    Domain(String, &'static str),

    #[error("Laurent window too narrow: lowest power {lo} but {required_lo} is required")]
    WindowTooNarrow { lo: i32, required_lo: i32 },

    #[error("coefficient of eps^{power} is beyond the known precision (known through eps^{hi})")]
    Truncated { power: i32, hi: i32 },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("unsupported coefficient {0}: only nonnegative integers are allowed here")]
    UnsupportedCoefficient(String),

    #[error("problem too large for {what}: {size} > {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("partitions cannot be refined to a common equal-measure partition: {0}")]
    Refinement(String),

    #[error("points live in different universes (depth {0} vs {1})")]
    UniverseMismatch(usize, usize),

    #[error("edge index {index} out of range for a graph with {edges} edges")]
    EdgeIndex { index: usize, edges: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
