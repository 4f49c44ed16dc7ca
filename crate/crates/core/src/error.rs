use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("energy at or above the continuum threshold")]
    ThresholdEnergy,

    #[error("structure constant gamma is zero")]
    GammaZero,

    #[error("structure constants gamma and epsilon are both zero")]
    EpsilonZero,

    #[error("no unitary representation of dimension {dim}")]
    NoUnitaryRep { dim: usize },

    #[error("structure function negative at N = {index}: {value:e}")]
    NegativePhi { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("calibration file: {0}")]
    Calibration(String),
}
