use sparse_ou::OuError;
use thiserror::Error;

pub const EXIT_PARTIAL: u8 = 5;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(what: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Io(format!("{what}: {err}"))
    }
}

impl From<OuError> for CliError {
    fn from(e: OuError) -> Self {
        match e {
            OuError::Io(err) => CliError::Io(err.to_string()),
            OuError::Numerical { message, condition } => CliError::Numerical(match condition {
                Some(c) => format!("{message} (condition number estimate {c:.3e})"),
                None => message,
            }),
            OuError::UnsupportedInput(m) => CliError::Config(format!("unsupported input: {m}")),
            OuError::InvalidArgument(m) => CliError::Config(m),
            OuError::Serde(err) => CliError::Config(err.to_string()),
        }
    }
}
