//! Boson representation of a quadratic form: `h` rewritten in terms of
//! ladder operators `b_j, b_j^dag = (q_j -+ i p_j)/sqrt(2)` as
//!
//! ```text
//! h = sum_ij A_ij (b_i^dag b_j + delta_ij/2)
//!       + (1/2) (Bp_ij b_i^dag b_j^dag + Bm_ij b_i b_j)
//! ```

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::form::QuadraticForm;
use crate::scalar::{fr, Real};

/// Coefficient matrices of the boson representation: `A` is hermitian,
/// `Bp`/`Bm` are symmetric, and for real input forms `Bm = conj(Bp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonRep<T: Real> {
    a: DMatrix<Complex<T>>,
    b_plus: DMatrix<Complex<T>>,
    b_minus: DMatrix<Complex<T>>,
}

impl<T: Real> BosonRep<T> {
    /// `A = (1/2)[V + T - i (U - U^t)]`, `B± = (1/2)[V - T ± i (U + U^t)]`.
    pub fn from_form(form: &QuadraticForm<T>) -> Self {
        let half = fr::<T>(0.5);
        let t = form.kinetic();
        let v = form.potential();
        let u = form.cross();
        let ut = u.transpose();
        let re_a = (v + t) * half;
        let im_a = (u - &ut) * -half;
        let re_b = (v - t) * half;
        let im_b = (u + &ut) * half;
        let cm = |re: &DMatrix<T>, im: &DMatrix<T>| {
            DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex::new(re[(i, j)], im[(i, j)]))
        };
        Self {
            a: cm(&re_a, &im_a),
            b_plus: cm(&re_b, &im_b),
            b_minus: cm(&re_b, &(-&im_b)),
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<Complex<T>> {
        &self.a
    }

    pub fn b_plus(&self) -> &DMatrix<Complex<T>> {
        &self.b_plus
    }

    pub fn b_minus(&self) -> &DMatrix<Complex<T>> {
        &self.b_minus
    }

    /// Invert the representation back to the coefficient matrices, using
    /// `A + Bp = V + i U^t` and `A - Bp = T - i U`.
    pub fn to_form(&self) -> QuadraticForm<T> {
        let sum = &self.a + &self.b_plus;
        let dif = &self.a - &self.b_plus;
        let v = sum.map(|z| z.re);
        let t = dif.map(|z| z.re);
        let u = dif.map(|z| -z.im);
        QuadraticForm::assemble(t, v, u).expect("boson round-trip preserves symmetry")
    }
}
