use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("{value} is not a unit modulo {modulus}")]
    NotUnit { value: i64, modulus: u64 },

    #[error("resource guard: {what} = {value} exceeds the limit {limit}")]
    ResourceLimit {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("series `{label}` has {len} terms but {need} are required")]
    SeriesTooShort { label: String, len: usize, need: usize },

    #[error("series `{0}` holds exact integers; a real-valued series is required")]
    ExactSeries(String),

    #[error("Gamma factor evaluated within {distance:e} of the pole at s = {pole}")]
    Pole { pole: Complex64, distance: f64 },

    #[error("{what} disagree at n = {n}: |difference| = {difference:e}")]
    Mismatch {
        what: &'static str,
        n: usize,
        difference: f64,
    },

    #[error("quadrature accuracy not met: {0}")]
    Quadrature(String),

    #[error("truncation budget exceeded: {0}")]
    Truncation(String),

    #[error("table length {len} does not match modulus {q}")]
    TableLength { len: usize, q: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
