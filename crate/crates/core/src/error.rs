use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("degenerate drift matrix (a={a}, b={b}, c={c}, d={d}); the 2D analysis needs a, d > 0 and b, c < 0")]
    Degenerate { a: f64, b: f64, c: f64, d: f64 },

    #[error("state ({x_l}, {x_r}) out of bounds for parts of length ({left}, {right})")]
    StateOutOfBounds {
        x_l: usize,
        x_r: usize,
        left: usize,
        right: usize,
    },

    #[error("flip counts ({i}, {j}) out of range for state ({x_l}, {x_r})")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        x_l: usize,
        x_r: usize,
    },

    #[error("brute-force enumeration supports n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("mutation rate chi/n must be below 1 (chi = {chi}, n = {n})")]
    MutationRate { chi: f64, n: usize },

    #[error("not in the efficient regime (classifier = {0})")]
    NotEfficient(f64),

    #[error("not in the inefficient regime (classifier = {0})")]
    NotInefficient(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
