use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("unknown waveform `{0}`")]
    UnknownWaveform(String),

    #[error("cost became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize },

    #[error("photon number must be non-negative, got {0}")]
    InvalidPhotonNumber(i64),

    #[error("subspace is not invariant (leakage norm {leakage:.3e})")]
    SubspaceNotInvariant { leakage: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
