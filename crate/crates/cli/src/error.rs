use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Hots(#[from] hotskit::HotsError),

    #[error("{0}: {1}")]
    File(String, std::io::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scores file line {line}: {message}")]
    Scores { line: usize, message: String },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
