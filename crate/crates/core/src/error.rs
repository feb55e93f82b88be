use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("letter {letter} is out of range for an alphabet of size {alphabet}")]
    LetterOutOfRange { letter: u8, alphabet: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word {word} contains a square of period {period} (bound {bound})")]
    ShortSquare {
        word: String,
        period: usize,
        bound: usize,
    },

    #[error("weight vector is identically zero")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("lambda digest mismatch: expected {expected}, found {found}")]
    DigestMismatch { expected: String, found: String },

    #[error("certificate verification failed: {0}")]
    VerificationFailed(String),

    #[error("iteration drove the weight of vertex {vertex} to zero")]
    DeadVertex { vertex: u32 },

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
