use thiserror::Error;

/// Crate-wide error type. The three variants map onto the CLI exit codes
/// (1 = configuration, 2 = data, 3 = internal fault).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal fault: {0}")]
    Fault(String),
}

impl Error {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) => 2,
            Error::Fault(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
