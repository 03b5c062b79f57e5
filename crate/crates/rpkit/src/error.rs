use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Invalid flags or configuration.
    pub const CONFIG: u8 = 2;
    /// Unreadable or malformed input, or an output that could not be written.
    pub const IO: u8 = 3;
    /// No households survived cleaning.
    pub const EMPTY_PANEL: u8 = 4;
    /// Too few rows, or a singular design, for the requested regression.
    pub const INSUFFICIENT_DATA: u8 = 5;
    /// Any other estimation failure.
    pub const ESTIMATION: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rpkit_core::Error),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Format { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        use rpkit_core::Error as E;
        match self {
            CliError::Core(E::EmptyPanel) => exit::EMPTY_PANEL,
            CliError::Core(E::InsufficientData { .. } | E::RankDeficient { .. }) => {
                exit::INSUFFICIENT_DATA
            }
            CliError::Core(E::InvalidParameter(_)) | CliError::Config(_) => exit::CONFIG,
            CliError::Core(_) => exit::ESTIMATION,
            CliError::Io { .. } | CliError::Format { .. } => exit::IO,
        }
    }
}
