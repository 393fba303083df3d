//! Maps errors to process exit codes.

use gof_core::GofError;

use crate::input::InputError;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_TABLE_MISMATCH: i32 = 4;

/// A flag combination the command cannot run with.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<InputError>() {
            return EXIT_DATA;
        }
        if let Some(g) = cause.downcast_ref::<GofError>() {
            return match g {
                GofError::TableMismatch(_) => EXIT_TABLE_MISMATCH,
                GofError::InvalidArgument { .. } | GofError::EmptyInterval(_) | GofError::MissingCriticalValue(_) => {
                    EXIT_USAGE
                }
                GofError::OutsideSupport { .. }
                | GofError::EmptySample
                | GofError::NonFinite { .. }
                | GofError::Format(_) => EXIT_DATA,
                GofError::Numeric(_) | GofError::Io(_) => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}
