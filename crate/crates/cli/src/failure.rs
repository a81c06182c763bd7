use std::fmt;
use std::process::ExitCode;

/// Bad flags, config, paths or incompatible inputs.
pub const EXIT_USAGE: u8 = 2;
/// A solver or factorization failed numerically.
pub const EXIT_NUMERICAL: u8 = 3;
/// A benchmark suite ran to completion but some checks failed.
pub const EXIT_CHECKS_FAILED: u8 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn checks(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECKS_FAILED,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<lsmc_core::Error> for Failure {
    fn from(e: lsmc_core::Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}
