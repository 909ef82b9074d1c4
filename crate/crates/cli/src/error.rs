use thiserror::Error;

/// Errors surfaced by the command line, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// One or more invalid inputs; each entry names the offending field.
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle check failed: {0}")]
    OracleFailure(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::OracleFailure(_) => 3,
        }
    }
}

/// Rewrites a model error so that it names the configuration field.
pub(crate) fn field_error(field: &str, err: sqzamp_core::Error) -> String {
    match err {
        sqzamp_core::Error::Domain { value, reason, .. } => {
            format!("{field} = {value} is out of range: {reason}")
        }
        other => format!("{field}: {other}"),
    }
}
