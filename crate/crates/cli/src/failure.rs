use serde::Serialize;
use sos_lab::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Machine-readable error, printed as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            error: "config",
            message: message.into(),
            exit_code: EXIT_CONFIG,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            error: "io",
            message: message.into(),
            exit_code: EXIT_FAILURE,
        }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self {
            error: "check_failed",
            message: message.into(),
            exit_code: EXIT_FAILURE,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (error, exit_code) = match &e {
            Error::NonConvergence { .. }
            | Error::NotPositive { .. }
            | Error::WindowTooSmall { .. }
            | Error::TruncationDefect { .. } => ("numerical", EXIT_NUMERICAL),
            Error::WindowOverflow { .. } | Error::DimensionCap { .. } | Error::EnumerationCap { .. } => {
                ("resource_cap", EXIT_RESOURCE)
            }
            Error::InvalidDistribution(_)
            | Error::MgfOutOfRange { .. }
            | Error::GridOutsideWindow { .. }
            | Error::InvalidInput(_) => ("config", EXIT_CONFIG),
        };
        Self {
            error,
            message: e.to_string(),
            exit_code,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}
