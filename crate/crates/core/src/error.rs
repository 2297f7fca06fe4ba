use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },

    #[error("token `{0}` is not in the lexicon")]
    OutOfVocabulary(String),

    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u32),

    #[error("phone-unit count must be at least 2 (blank plus one phone), got {0}")]
    TooFewPhones(usize),

    #[error("bigram model: {0}")]
    Bigram(String),

    #[error("empty corpus: at least one transcript is required")]
    EmptyCorpus,

    #[error("invalid emission matrix: {0}")]
    InvalidEmissions(String),

    #[error("arc label {label} is out of range for {num_units} emission units")]
    LabelOutOfRange { label: u32, num_units: usize },

    #[error("graph admits no path over {frames} frames")]
    NoPath { frames: usize },

    #[error("numerator graph admits no path over {frames} frames")]
    NumeratorInfeasible { frames: usize },

    #[error("denominator graph admits no path over {frames} frames")]
    DenominatorInfeasible { frames: usize },

    #[error("frame index {t} out of range (valid: {min}..={max})")]
    FrameOutOfRange { t: usize, min: usize, max: usize },

    #[error("missing objective component `{0}`")]
    MissingComponent(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported {kind} format version {found} (expected {expected})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
