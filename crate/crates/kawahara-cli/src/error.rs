use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}` expects {expected}, got `{got}`")]
    TypeMismatch { key: String, expected: &'static str, got: String },
    #[error("missing value for key `{key}`")]
    MissingValue { key: String },
    #[error("config line {line} is not `key = value`: {text}")]
    Syntax { line: usize, text: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Numeric(#[from] kawahara::Error),
}

impl CliError {
    /// Short machine-readable tag for failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::UnknownKey { .. } => "unknown_key",
            CliError::TypeMismatch { .. } => "type_mismatch",
            CliError::MissingValue { .. } => "missing_value",
            CliError::Syntax { .. } => "syntax",
            CliError::Invalid { .. } => "invalid_value",
            CliError::Io { .. } => "io",
            CliError::Numeric(_) => "numeric",
        }
    }

    /// The configuration key at fault, when there is one.
    pub fn key(&self) -> Option<String> {
        match self {
            CliError::UnknownKey { key }
            | CliError::TypeMismatch { key, .. }
            | CliError::MissingValue { key }
            | CliError::Invalid { key, .. } => Some(key.clone()),
            CliError::Numeric(kawahara::Error::InvalidParameter { name, .. }) => Some(name.to_string()),
            _ => None,
        }
    }

    /// Configuration problems exit with 2, failures during a run with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(kawahara::Error::InvalidParameter { .. } | kawahara::Error::InvalidGrid(_)) => 2,
            CliError::Numeric(_) | CliError::Io { .. } => 3,
            _ => 2,
        }
    }
}
