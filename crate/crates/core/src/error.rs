use std::io;

use thiserror::Error;

/// Errors produced by the transform engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("format error in kernel {index}: {reason}")]
    KernelFormat { index: usize, reason: String },

    #[error(
        "batch size {batch_size} needs an estimated {required_bytes} bytes, \
         over the {budget_bytes} byte budget"
    )]
    Sizing {
        batch_size: usize,
        required_bytes: u64,
        budget_bytes: u64,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
