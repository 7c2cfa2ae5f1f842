//! Structure flags derived from a spectral decomposition: dynamical
//! stability and separability.

use num_complex::Complex;

use crate::scalar::Real;
use crate::spectral::SpectralDecomposition;

/// Qualitative structure of a quadratic system.
///
/// Dynamical stability (bounded quasiperiodic evolution of every coordinate
/// and momentum) requires a diagonalizable RPA matrix with a purely real
/// spectrum. Separability (the form splits into independent single-mode
/// terms) tolerates zero-frequency Jordan blocks of dimension 2 — free
/// particle terms — but nothing larger.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport<T: Real> {
    pub diagonalizable: bool,
    pub real_spectrum: bool,
    pub dynamically_stable: bool,
    pub separable: bool,
    pub block_profile: Vec<(Complex<T>, usize)>,
}

/// Classify a decomposition. Reality of eigenfrequencies is decided at the
/// decomposition's own validated tolerance.
pub fn classify_structure<T: Real>(dec: &SpectralDecomposition<T>) -> StructureReport<T> {
    let tol = dec.tol_used;
    let diagonalizable = dec.is_diagonalizable();
    let real_spectrum = dec
        .eigenfrequencies
        .iter()
        .all(|l| l.im.abs() <= tol);
    let separable = dec
        .blocks
        .iter()
        .all(|b| b.dim == 1 || (b.dim == 2 && b.lambda.norm() <= tol));
    StructureReport {
        diagonalizable,
        real_spectrum,
        dynamically_stable: diagonalizable && real_spectrum,
        separable,
        block_profile: dec.block_profile(),
    }
}
