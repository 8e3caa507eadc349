use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] grf_core::GrfError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("report: {0}")]
    Report(String),
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Report(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Report(e.to_string())
    }
}
