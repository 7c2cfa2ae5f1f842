//! Quadratic forms `h = (1/2) R^t Hc R` in the column convention
//! `R = (q_1..q_n, p_1..p_n)`, together with the symplectic metric and the
//! real equation-of-motion generator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{as_f64, fr, Real};

/// Standard symplectic matrix `J = [[0, I], [-I, 0]]` for `n` degrees of
/// freedom (a `2n x 2n` matrix). The commutation metric of the hermitian
/// coordinates and momenta is `i*J`.
pub fn symplectic_j<T: Real>(n: usize) -> DMatrix<T> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = T::one();
        j[(n + k, k)] = -T::one();
    }
    j
}

/// Commutation metric `Mc = i*J` as a complex matrix.
pub fn metric_mc<T: Real>(n: usize) -> DMatrix<Complex<T>> {
    symplectic_j::<T>(n).map(|x| Complex::new(T::zero(), x))
}

fn relative_asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    let dev = (m - m.transpose()).norm();
    dev / T::one().max(m.norm())
}

/// A quadratic form defined by the symmetric kinetic matrix `T`, the
/// symmetric potential matrix `V` and the cross matrix `U`:
///
/// ```text
/// h = (1/2) sum_ij T_ij p_i p_j + V_ij q_i q_j + U_ij (q_i p_j + p_j q_i)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T: Real> {
    n: usize,
    kinetic: DMatrix<T>,
    potential: DMatrix<T>,
    cross: DMatrix<T>,
}

impl<T: Real> QuadraticForm<T> {
    /// Assemble a form from its three coefficient matrices (kinetic `T`,
    /// potential `V`, cross `U`). `T` and `V` must be square, of equal size
    /// and symmetric to within `1e-12` relative; they are symmetrized
    /// exactly on storage.
    pub fn assemble(
        kinetic: DMatrix<T>,
        potential: DMatrix<T>,
        cross: DMatrix<T>,
    ) -> Result<Self> {
        let n = kinetic.nrows();
        for m in [&kinetic, &potential, &cross] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        let sym_tol = fr::<T>(1e-12).max(T::default_epsilon() * fr(8.0));
        for (m, name) in [(&kinetic, "T"), (&potential, "V")] {
            let dev = relative_asymmetry(m);
            if dev > sym_tol {
                return Err(Error::NotSymmetric {
                    which: name,
                    deviation: as_f64(dev),
                });
            }
        }
        let half = fr::<T>(0.5);
        Ok(Self {
            n,
            kinetic: (&kinetic + kinetic.transpose()) * half,
            potential: (&potential + potential.transpose()) * half,
            cross,
        })
    }

    /// The zero form on `n` degrees of freedom.
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            kinetic: DMatrix::zeros(n, n),
            potential: DMatrix::zeros(n, n),
            cross: DMatrix::zeros(n, n),
        }
    }

    /// Rebuild a form from an assembled symmetric `2n x 2n` Hamiltonian
    /// matrix `[[V, U], [U^t, T]]`.
    pub fn from_hamiltonian_matrix(h: &DMatrix<T>) -> Result<Self> {
        let dim = h.nrows();
        if dim % 2 != 0 || h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim + dim % 2,
                got: h.ncols(),
            });
        }
        let dev = relative_asymmetry(h);
        let sym_tol = fr::<T>(1e-12).max(T::default_epsilon() * fr(8.0));
        if dev > sym_tol {
            return Err(Error::NotSymmetric {
                which: "Hc",
                deviation: as_f64(dev),
            });
        }
        let n = dim / 2;
        Self::assemble(
            h.view((n, n), (n, n)).into_owned(),
            h.view((0, 0), (n, n)).into_owned(),
            h.view((0, n), (n, n)).into_owned(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kinetic(&self) -> &DMatrix<T> {
        &self.kinetic
    }

    pub fn potential(&self) -> &DMatrix<T> {
        &self.potential
    }

    pub fn cross(&self) -> &DMatrix<T> {
        &self.cross
    }

    /// The symmetric `2n x 2n` Hamiltonian matrix `Hc = [[V, U], [U^t, T]]`.
    pub fn hamiltonian_matrix(&self) -> DMatrix<T> {
        let n = self.n;
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.potential);
        h.view_mut((0, n), (n, n)).copy_from(&self.cross);
        h.view_mut((n, 0), (n, n)).copy_from(&self.cross.transpose());
        h.view_mut((n, n), (n, n)).copy_from(&self.kinetic);
        h
    }

    /// Real generator `G = J*Hc = [[U^t, T], [-V, -U]]` of the Heisenberg
    /// equations `dR/dt = G R`. The RPA matrix of the form is `i*G`, so the
    /// eigenfrequencies are `lambda = i*mu` for eigenvalues `mu` of `G`.
    pub fn generator(&self) -> DMatrix<T> {
        let n = self.n;
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.cross.transpose());
        g.view_mut((0, n), (n, n)).copy_from(&self.kinetic);
        g.view_mut((n, 0), (n, n)).copy_from(&(-&self.potential));
        g.view_mut((n, n), (n, n)).copy_from(&(-&self.cross));
        g
    }

    /// Evaluate the classical value `(1/2) r^t Hc r` on a real phase-space
    /// point.
    pub fn value(&self, r: &DVector<T>) -> T {
        let h = self.hamiltonian_matrix();
        (r.transpose() * h * r)[(0, 0)] * fr(0.5)
    }

    /// Commutator form: for `O_a = (1/2) R^t Ha R` and
    /// `O_b = (1/2) R^t Hb R`, the quantum commutator is
    /// `[O_a, O_b] = i * (1/2) R^t Hq R` where the returned form holds `Hq`.
    /// Its generator is the matrix bracket of the two input generators,
    /// `Gq = [Ga, Gb]`, and `Hq = -J*Gq`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let ga = self.generator();
        let gb = other.generator();
        let bracket = &ga * &gb - &gb * &ga;
        let hq = -symplectic_j::<T>(self.n) * bracket;
        // Symmetric in exact arithmetic; enforce against roundoff.
        let hq = (&hq + hq.transpose()) * fr::<T>(0.5);
        Self::from_hamiltonian_matrix(&hq)
    }
}

/// A linear operator `c^t R` over `R = (q_1..q_n, p_1..p_n)` with complex
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoeffs<T: Real> {
    coeffs: DVector<Complex<T>>,
}

impl<T: Real> OperatorCoeffs<T> {
    pub fn new(coeffs: DVector<Complex<T>>) -> Result<Self> {
        if coeffs.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len() + 1,
                got: coeffs.len(),
            });
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &DVector<Complex<T>> {
        &self.coeffs
    }

    /// Scalar commutator `[c1^t R, c2^t R] = c1^t (i J) c2`.
    pub fn commutator(&self, other: &Self) -> Result<Complex<T>> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            });
        }
        let n = self.coeffs.len() / 2;
        let mc = metric_mc::<T>(n);
        Ok((self.coeffs.transpose() * mc * &other.coeffs)[(0, 0)])
    }
}
