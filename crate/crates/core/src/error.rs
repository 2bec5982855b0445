use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown tag type `{0}`")]
    UnknownTagType(String),

    #[error("unknown tag `{tag}` for tag type `{tag_type}`")]
    UnknownTag { tag_type: String, tag: String },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no enrichment function has been executed")]
    NoOutputs,

    #[error("value {0} outside [0, 1]")]
    OutOfUnitRange(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tag type `{0}` has no enrichment functions")]
    NoFunctions(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
