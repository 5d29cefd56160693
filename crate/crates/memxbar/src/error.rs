use std::io;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Malformed or inconsistent configuration. Maps to exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Bad input data (empty arrays, missing columns, ...).
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] memxbar_core::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        HarnessError::Input(msg.into())
    }
}
