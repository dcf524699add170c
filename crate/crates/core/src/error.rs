use thiserror::Error;

/// Errors produced by sequence construction, codecs and search configuration.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("sequence length {0} is below the minimum of 2")]
    InvalidLength(usize),

    #[error("element {value} at position {position} is not +1 or -1")]
    InvalidElement { position: usize, value: i64 },

    #[error("index {index} out of range for {bound} positions")]
    IndexOutOfRange { index: usize, bound: usize },

    /// Energy is zero, so the merit factor is unbounded.
    #[error("sequence has zero energy (infinite merit factor)")]
    InfiniteMerit,

    #[error("invalid hex digit {0:?}")]
    HexDigit(char),

    #[error("declared length {length} exceeds the {available} bits encoded")]
    HexTooShort { length: usize, available: usize },

    #[error("hex string has set bits above position {0}")]
    HexHighBits(usize),

    #[error("{0} is not an odd prime")]
    NotPrime(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length {length} exceeds the enumeration bound {bound}")]
    EnumerationBound { length: usize, bound: usize },

    #[error("malformed record: {0}")]
    Record(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
