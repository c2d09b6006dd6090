use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building codes, parsing configuration or running
/// simulations.
#[derive(Error, Debug)]
pub enum Error {
    #[error("K + c = {needed} exceeds block length {block_length}")]
    RateTooHigh { needed: usize, block_length: usize },

    #[error("block length exponent must be in 1..=20, got {0}")]
    BadExponent(u32),

    #[error("frozen mask has length {got}, expected {expected}")]
    MaskLength { got: usize, expected: usize },

    #[error("frozen mask leaves {got} non-frozen positions, expected {expected}")]
    MaskPopcount { got: usize, expected: usize },

    #[error("malformed frozen-set file: {0}")]
    MaskFormat(String),

    #[error("invalid CRC: {0}")]
    Crc(String),

    #[error("length mismatch: got {got}, expected {expected}")]
    Length { got: usize, expected: usize },

    #[error("noise variance must be positive and finite, got {0}")]
    BadVariance(f64),

    #[error("code rate must lie in (0, 1], got {0}")]
    BadRate(f64),

    #[error("index {0} is not an information position")]
    NotInformation(usize),

    #[error("flip set indices must be strictly increasing")]
    UnorderedFlipSet,

    #[error("bit-flip metric is undefined for an empty flip set")]
    EmptyFlipSet,

    #[error("invalid metric spec `{0}`")]
    MetricSpec(String),

    #[error("invalid decoder spec `{0}`")]
    DecoderSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite training loss at beta = {0:?}")]
    NonFiniteLoss(Vec<f64>),

    #[error("malformed LLR file: {0}")]
    LlrFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
