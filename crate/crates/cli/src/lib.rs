//! Command-line driver: config ingestion, run directories, gradient check.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod reference;

use std::fmt;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Other = 1,
    Config = 2,
    Numerical = 3,
    GridMismatch = 4,
    GradcheckFailed = 5,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind,
            error: error.into(),
        }
    }

    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitKind::Config, error)
    }

    pub fn other(error: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitKind::Other, error)
    }

    /// Core errors raised while computing: numerical ones map to exit 3.
    pub fn compute(error: slc_core::Error) -> Self {
        use slc_core::Error as E;
        let kind = match error {
            E::NonFiniteCost { .. } | E::NonFinite(_) | E::NoConvergence { .. } => {
                ExitKind::Numerical
            }
            _ => ExitKind::Other,
        };
        Self::new(kind, error)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for Failure {}

pub type CliResult<T> = std::result::Result<T, Failure>;
