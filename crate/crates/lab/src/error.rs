use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] residue_core::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
}

pub type LabResult<T> = std::result::Result<T, LabError>;
