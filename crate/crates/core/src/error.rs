use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown generator label index {0}")]
    UnknownLabel(u32),
    #[error("unknown plain generator index {0}")]
    UnknownPlain(u32),
    #[error("word is not a module word (exactly one module generator, in terminal position): {0}")]
    NotModuleWord(String),
    #[error("zero polynomial has no leading monomial")]
    ZeroPolynomial,
    #[error("rule pattern does not occur at the given position")]
    NoMatch,
    #[error("assignment violates the constraints of schema `{0}`")]
    Inadmissible(String),
    #[error("schema `{schema}`: {reason}")]
    Schema { schema: String, reason: String },
    #[error("index {index} exceeds the cap {cap}")]
    CapExceeded { index: u64, cap: u32 },
    #[error("not a normal word: {0}")]
    NotNormal(String),
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
