use thiserror::Error;

/// Errors produced by the quadratic-form engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix {which} is not symmetric (relative deviation {deviation:.3e})")]
    NotSymmetric { which: &'static str, deviation: f64 },

    #[error("matrix is not an RPA generator: J*G asymmetry {deviation:.3e}")]
    NotRpaGenerator { deviation: f64 },

    #[error("indeterminate spectral structure: {0}")]
    IndeterminateStructure(String),

    #[error("form is non-separable; handle through the Jordan decomposition")]
    NonSeparable,

    #[error("no discrete real spectrum: {0}")]
    NoDiscreteSpectrum(String),

    #[error("propagator overflow: magnitude representable only up to |t| ~ {max_t:.3e}")]
    Overflow { max_t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
