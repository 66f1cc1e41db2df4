use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum OuError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        /// Condition-number estimate of the offending matrix, when one exists.
        condition: Option<f64>,
    },

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OuError>;

impl OuError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        OuError::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        OuError::Numerical {
            message: msg.into(),
            condition: None,
        }
    }

    /// Prefix the message with extra context, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            OuError::InvalidArgument(m) => OuError::InvalidArgument(format!("{ctx}: {m}")),
            OuError::Numerical { message, condition } => OuError::Numerical {
                message: format!("{ctx}: {message}"),
                condition,
            },
            OuError::UnsupportedInput(m) => OuError::UnsupportedInput(format!("{ctx}: {m}")),
            other => other,
        }
    }
}
