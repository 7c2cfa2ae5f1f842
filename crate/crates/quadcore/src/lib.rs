//! Engine for quadratic forms in `n` coordinates and momenta: matrix
//! assembly, RPA spectral analysis with Jordan structure, stability and
//! separability classification, canonical normal forms and symplectic time
//! evolution.
//!
//! Everything is generic over the floating-point scalar (`f32`/`f64`);
//! the `*64` aliases below are the working defaults.

mod boson;
mod classify;
mod error;
mod form;
mod modes;
mod propagator;
mod scalar;
mod spectral;

pub use boson::BosonRep;
pub use classify::{classify_structure, StructureReport};
pub use error::{Error, Result};
pub use form::{metric_mc, symplectic_j, OperatorCoeffs, QuadraticForm};
pub use modes::{normal_form, spectrum_levels, Mode, ModeDecomposition, ModeKind};
pub use propagator::{
    evolve_moments, propagator, propagator_from_decomposition, MomentTrajectory,
    PropagatorMethod,
};
pub use scalar::Real;
pub use spectral::{default_tol, spectral, JordanBlock, SpectralDecomposition};

/// Concrete `f64` aliases.
pub type QuadraticForm64 = QuadraticForm<f64>;
pub type BosonRep64 = BosonRep<f64>;
pub type SpectralDecomposition64 = SpectralDecomposition<f64>;
pub type StructureReport64 = StructureReport<f64>;
pub type ModeDecomposition64 = ModeDecomposition<f64>;
pub type MomentTrajectory64 = MomentTrajectory<f64>;

/// Concrete `f32` aliases; pass a looser clustering tolerance than the
/// `f64` default when deciding spectral structure in single precision.
pub type QuadraticForm32 = QuadraticForm<f32>;
pub type BosonRep32 = BosonRep<f32>;
pub type SpectralDecomposition32 = SpectralDecomposition<f32>;
pub type StructureReport32 = StructureReport<f32>;
pub type ModeDecomposition32 = ModeDecomposition<f32>;
pub type MomentTrajectory32 = MomentTrajectory<f32>;
