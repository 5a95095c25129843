use serde::Serialize;
use thiserror::Error;

use decaylife_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("failing properties: {}", .0.join(", "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    failing: Option<&'a [String]>,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_domain() => EXIT_DOMAIN,
            CliError::Core(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Validation(_) | CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) if e.is_domain() => "domain",
            CliError::Core(_) => "validation",
            CliError::Io(_) => "io",
            CliError::Validation(_) => "failed_properties",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let failing = match self {
            CliError::Validation(v) => Some(v.as_slice()),
            _ => None,
        };
        serde_json::to_string(&ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            failing,
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"internal\",\"exit_code\":{EXIT_INTERNAL}}}"))
    }
}
