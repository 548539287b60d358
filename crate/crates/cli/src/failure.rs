//! Exit-code classification: 2 for bad input, 1 for failed computation.

use anyhow::anyhow;
use phasefit::Error;

pub enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Domain { .. } | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.into())
            }
            _ => Failure::Compute(e.into()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub trait Context<T> {
    fn usage(self, what: &str) -> CliResult<T>;
    fn compute(self, what: &str) -> CliResult<T>;
}

impl<T, E: std::fmt::Display> Context<T> for std::result::Result<T, E> {
    fn usage(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::Usage(anyhow!("{what}: {e}")))
    }

    fn compute(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::Compute(anyhow!("{what}: {e}")))
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(anyhow!(msg.into())))
}
