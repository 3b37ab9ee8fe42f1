use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("letter {letter:?} is not in the alphabet {alphabet:?}")]
    UnknownLetter {
        letter: String,
        alphabet: Vec<String>,
    },

    #[error("words are over different alphabets")]
    AlphabetMismatch,

    #[error("pattern of length {pattern} is longer than word of length {word}")]
    PatternTooLong { pattern: usize, word: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index set is not strictly increasing at position {position}")]
    NotIncreasing { position: usize },

    #[error("{what}: {count} exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("empty word")]
    EmptyWord,

    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("function leaves [0,1] on piece {piece}")]
    OutOfUnitRange { piece: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing densities for patterns: {}", .0.join(", "))]
    MissingPatterns(Vec<String>),

    #[error("moment formula failed validation against direct integration:\n{0}")]
    ConventionMismatch(String),

    #[error("iteration cap {cap} exceeded")]
    IterationCap { cap: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
