use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("mode index {index} out of range for a {modes}-mode space")]
    IndexOutOfRange { index: usize, modes: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate detuning: {0}")]
    DegenerateDetuning(String),

    #[error("outside the perturbative regime: {0}")]
    NonPerturbative(String),

    #[error("no gap minimum strictly inside the scan grid (minimum at grid index {index})")]
    Bracket { index: usize },

    #[error("branch identification failed at delta_a = {delta_a}: subspace overlap {overlap:.3} < 0.5")]
    Identification { delta_a: f64, overlap: f64 },

    #[error("trace drift {drift:.3e} exceeds 1e-6; reduce dt")]
    StepSize { drift: f64 },

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported spectral variant: {0}")]
    Variant(String),

    #[error("Dyson solver diverged at t = {t}: |U| = {magnitude:.4}")]
    Divergence { t: f64, magnitude: f64 },

    #[error("grid mismatch: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
