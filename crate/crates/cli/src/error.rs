//! Error taxonomy shared by every subcommand, mapped onto the process exit
//! codes: 1 for input or configuration problems, 2 for estimation
//! non-convergence, 3 for internal faults (such as failing to write an
//! output file). Every variant carries the pipeline stage it arose in so a
//! failing run names both the stage and the offending record.

use std::fmt;

use thiserror::Error;

/// Exit code 1: the run was configured or fed incorrectly.
pub const EXIT_INPUT: i32 = 1;
/// Exit code 2: an estimator failed to converge.
pub const EXIT_NON_CONVERGENCE: i32 = 2;
/// Exit code 3: the tool itself failed (I/O, serialization, bugs).
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Problems with the config document itself: unreadable file, unknown
    /// keys, missing required keys, values that fail validation.
    #[error("config: {0}")]
    Config(String),
    /// Problems with the configured inputs: unreadable files, malformed
    /// rows, model specifications the data cannot support.
    #[error("{stage}: {message}")]
    Input { stage: &'static str, message: String },
    /// An estimator ran but did not converge.
    #[error("{stage}: {message}")]
    NonConvergence { stage: &'static str, message: String },
    /// The tool failed after its inputs were accepted.
    #[error("{stage}: {message}")]
    Internal { stage: &'static str, message: String },
}

impl CliError {
    pub fn input(stage: &'static str, message: impl fmt::Display) -> CliError {
        CliError::Input {
            stage,
            message: message.to_string(),
        }
    }

    pub fn internal(stage: &'static str, message: impl fmt::Display) -> CliError {
        CliError::Internal {
            stage,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => EXIT_INPUT,
            CliError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
            CliError::Internal { .. } => EXIT_INTERNAL,
        }
    }
}
