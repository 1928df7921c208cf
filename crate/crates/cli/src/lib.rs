//! Harness around `dphh-core`: stream files, synthetic generators,
//! configuration, run drivers and metrics.

pub mod config;
pub mod generate;
pub mod output;
pub mod run;
pub mod stream;

use thiserror::Error;

/// Errors surfaced to the command line, grouped by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(#[from] stream::InputError),
    #[error("{context}: {source}")]
    Algorithm {
        context: &'static str,
        #[source]
        source: dphh_core::Error,
    },
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration, 3 for input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Input(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn algo(context: &'static str) -> impl FnOnce(dphh_core::Error) -> Self {
        move |source| HarnessError::Algorithm { context, source }
    }
}

impl From<config::ConfigError> for HarnessError {
    fn from(e: config::ConfigError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
