//! Time evolution: the symplectic propagator `E(t) = exp(G t)` by
//! scaling-and-squaring with a Pade core, or by the closed Jordan-form
//! expansion of the spectral decomposition. Both routes agree to tolerance
//! on every regime and are cross-checked in the tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{as_f64, fr, Real};
use crate::spectral::SpectralDecomposition;

/// Which evaluation route to use for the propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorMethod {
    /// Scaling-and-squaring matrix exponential of the real generator.
    Exp,
    /// Closed Jordan-form expansion `W e^{-i Jordan t} W^{-1}`.
    Jordan,
}

/// Fraction of the representable exponent budget the propagator may use;
/// squaring stages square intermediate magnitudes, so stay well below
/// `ln(MAX)`.
const OVERFLOW_HEADROOM: f64 = 0.35;

fn growth_rate<T: Real>(g: &DMatrix<T>) -> T {
    // Largest real part over the eigenvalues of G (= max |Im lambda|).
    let mu = g.clone().complex_eigenvalues();
    let mut a = T::zero();
    for m in mu.iter() {
        a = a.max(m.re);
    }
    a
}

fn check_overflow<T: Real>(rate: T, t: T) -> Result<()> {
    let budget = fr::<T>(OVERFLOW_HEADROOM) * T::max_value().ln();
    if rate * t.abs() > budget {
        return Err(Error::Overflow {
            max_t: as_f64(budget / rate),
        });
    }
    Ok(())
}

/// Pade(13,13) scaling-and-squaring exponential of a real matrix.
pub(crate) fn expm<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let dim = a.nrows();
    let ident = DMatrix::<T>::identity(dim, dim);
    let norm = a
        .column_iter()
        .map(|c| c.iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), |m, s| m.max(s)); // 1-norm
    let theta13 = fr::<T>(5.371920351148152);
    let mut squarings = 0usize;
    let mut scaled = a.clone();
    if norm > theta13 {
        let s = (norm / theta13).log2().ceil();
        squarings = as_f64(s) as usize;
        let factor = fr::<T>(0.5).powi(squarings as i32);
        scaled *= factor;
    }

    // Pade coefficients for degree 13.
    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * fr::<T>(b[13]) + &a4 * fr::<T>(b[11]) + &a2 * fr::<T>(b[9]))
        + &a6 * fr::<T>(b[7])
        + &a4 * fr::<T>(b[5])
        + &a2 * fr::<T>(b[3])
        + &ident * fr::<T>(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * fr::<T>(b[12]) + &a4 * fr::<T>(b[10]) + &a2 * fr::<T>(b[8]))
        + &a6 * fr::<T>(b[6])
        + &a4 * fr::<T>(b[4])
        + &a2 * fr::<T>(b[2])
        + &ident * fr::<T>(b[0]);
    let num = &v + &u;
    let den = &v - &u;
    let mut e = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is well conditioned below theta_13");
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

/// Propagator via the requested method. `tol` is the spectral clustering
/// tolerance used when the Jordan route has to be constructed.
pub fn propagator<T: Real>(
    g: &DMatrix<T>,
    t: T,
    method: PropagatorMethod,
    tol: T,
) -> Result<DMatrix<T>> {
    match method {
        PropagatorMethod::Exp => {
            check_overflow(growth_rate(g), t)?;
            let e = expm(&(g * t));
            if e.iter().any(|x| !x.is_finite()) {
                return Err(Error::Overflow { max_t: as_f64(t) });
            }
            Ok(e)
        }
        PropagatorMethod::Jordan => {
            let dec = crate::spectral::spectral(g, tol)?;
            propagator_from_decomposition(&dec, t)
        }
    }
}

/// Closed-form propagator from a spectral decomposition:
/// `E(t) = W exp(-i Jordan t) W^{-1}`, where per block the exponential is
/// `e^{-i lambda t}` times the upper-triangular polynomial matrix with
/// entries `(-i t)^(l-k)/(l-k)!`.
pub fn propagator_from_decomposition<T: Real>(
    dec: &SpectralDecomposition<T>,
    t: T,
) -> Result<DMatrix<T>> {
    let rate = dec
        .eigenfrequencies
        .iter()
        .fold(T::zero(), |m, l| m.max(l.im.abs()));
    check_overflow(rate, t)?;
    let dim = dec.w.nrows();
    let mut core = DMatrix::<Complex<T>>::zeros(dim, dim);
    let mit = Complex::new(T::zero(), -t); // -i t
    for b in &dec.blocks {
        let phase = (Complex::new(T::zero(), -t) * b.lambda).exp();
        for k in 0..b.dim {
            let mut coef = Complex::new(T::one(), T::zero());
            for l in k..b.dim {
                // coef = (-i t)^(l-k) / (l-k)!
                core[(b.col + k, b.col + l)] = phase * coef;
                let step = fr::<T>((l - k + 1) as f64);
                coef = coef * mit / Complex::new(step, T::zero());
            }
        }
    }
    let e = &dec.w * core * &dec.w_inv;
    let im = e.map(|z| z.im).norm();
    let scale = T::one().max(e.map(|z| z.re).norm());
    if im > fr::<T>(1e-6) * scale {
        return Err(Error::IndeterminateStructure(format!(
            "jordan propagator has imaginary residue {:.3e}",
            as_f64(im)
        )));
    }
    let e = e.map(|z| z.re);
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow { max_t: as_f64(t) });
    }
    Ok(e)
}

/// First and second moments along the evolution: `mean(t) = E(t) mean0`,
/// `cov(t) = E(t) cov0 E(t)^t`.
#[derive(Debug, Clone)]
pub struct MomentTrajectory<T: Real> {
    pub times: Vec<T>,
    pub means: Vec<DVector<T>>,
    pub covariances: Vec<DMatrix<T>>,
}

pub fn evolve_moments<T: Real>(
    g: &DMatrix<T>,
    mean0: &DVector<T>,
    cov0: &DMatrix<T>,
    times: &[T],
) -> Result<MomentTrajectory<T>> {
    let dim = g.nrows();
    if mean0.len() != dim || cov0.nrows() != dim || cov0.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mean0.len().max(cov0.nrows()),
        });
    }
    let dev = (cov0 - cov0.transpose()).norm() / T::one().max(cov0.norm());
    if dev > fr(1e-10) {
        return Err(Error::NotSymmetric {
            which: "cov0",
            deviation: as_f64(dev),
        });
    }
    let rate = growth_rate(g);
    let mut means = Vec::with_capacity(times.len());
    let mut covs = Vec::with_capacity(times.len());
    for &t in times {
        check_overflow(rate, t)?;
        let e = expm(&(g * t));
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow { max_t: as_f64(t) });
        }
        means.push(&e * mean0);
        covs.push(&e * cov0 * e.transpose());
    }
    Ok(MomentTrajectory {
        times: times.to_vec(),
        means,
        covariances: covs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{symplectic_j, QuadraticForm};
    use crate::spectral::{default_tol, spectral};

    fn dm(n: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, data)
    }

    fn rotor(kx: f64, ky: f64, omega: f64) -> QuadraticForm<f64> {
        QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[kx + omega * omega, 0.0, 0.0, ky + omega * omega]),
            dm(2, &[0.0, -omega, omega, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let g = rotor(-1.0, -4.0, 1.0).generator();
        let e = propagator(&g, 0.0, PropagatorMethod::Exp, default_tol()).unwrap();
        assert!((e - DMatrix::<f64>::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn free_particle_drift() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[0.0]), dm(1, &[0.0])).unwrap();
        for t in [0.5, 2.0, -1.25] {
            for method in [PropagatorMethod::Exp, PropagatorMethod::Jordan] {
                let e = propagator(&f.generator(), t, method, default_tol()).unwrap();
                let expect = dm(2, &[1.0, t, 0.0, 1.0]);
                assert!((e - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn oscillator_rotation() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[1.0]), dm(1, &[0.0])).unwrap();
        let t = 0.7;
        let e = propagator(&f.generator(), t, PropagatorMethod::Exp, default_tol()).unwrap();
        let expect = dm(2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!((e - expect).norm() < 1e-14);
    }

    #[test]
    fn methods_agree_across_regimes() {
        // one representative per regime shape, including degenerate ones
        let cases = [
            (1.0, 2.0, 0.3),    // positive definite
            (-1.0, -4.0, 2.0),  // stable non-positive
            (-1.0, -4.0, 0.3),  // four imaginary
            (1.0, -1.0, 0.7),   // saddle
            (-1.0, -4.0, 1.0),  // full complex
            (0.0, 0.0, 0.5),    // landau
            (1.0, 0.0, 0.5),    // free + oscillator
            (-1.0, -4.0, 1.5),  // degenerate real pair (rank-2 blocks)
            (-1.0, -4.0, 0.5),  // degenerate imaginary pair
            (-1.0, 0.0, 0.5),   // rank-4 block
        ];
        for (kx, ky, om) in cases {
            let g = rotor(kx, ky, om).generator();
            let dec = spectral(&g, default_tol()).unwrap();
            for t in [0.1, 1.0, 3.7] {
                let e1 = propagator(&g, t, PropagatorMethod::Exp, default_tol()).unwrap();
                let e2 = propagator_from_decomposition(&dec, t).unwrap();
                let scale = 1.0f64.max(e1.norm());
                let diff = (&e1 - &e2).norm() / scale;
                assert!(diff < 1e-9, "method mismatch {diff} at ({kx},{ky},{om}) t={t}");
            }
        }
    }

    #[test]
    fn symplectic_and_energy_conserving() {
        let f = rotor(-1.0, -4.0, 1.0);
        let g = f.generator();
        let h = f.hamiltonian_matrix();
        let j = symplectic_j::<f64>(2);
        for t in [0.5, 2.0, 5.0, 10.0] {
            let e = propagator(&g, t, PropagatorMethod::Exp, default_tol()).unwrap();
            let scale = 1.0f64.max(e.norm() * e.norm());
            let symp = (&e * &j * e.transpose() - &j).norm();
            assert!(symp <= 1e-10 * scale, "symplectic {symp} at t={t}");
            let en = (e.transpose() * &h * &e - &h).norm();
            assert!(en <= 1e-10 * scale * h.norm(), "energy {en} at t={t}");
        }
    }

    #[test]
    fn group_law() {
        let g = rotor(1.0, -1.0, 0.7).generator();
        let (t, s) = (0.8, 1.7);
        let et = propagator(&g, t, PropagatorMethod::Exp, default_tol()).unwrap();
        let es = propagator(&g, s, PropagatorMethod::Exp, default_tol()).unwrap();
        let ets = propagator(&g, t + s, PropagatorMethod::Exp, default_tol()).unwrap();
        let scale = 1.0f64.max(ets.norm() * ets.norm());
        assert!((et * es - ets).norm() <= 1e-10 * scale);
    }

    #[test]
    fn strongly_unstable_overflows_with_horizon() {
        // inverted oscillator: growth rate 1
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[-1.0]), dm(1, &[0.0])).unwrap();
        let err = propagator(&f.generator(), 1e4, PropagatorMethod::Exp, default_tol());
        match err {
            Err(Error::Overflow { max_t }) => assert!(max_t > 100.0 && max_t < 709.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn ground_state_covariance_is_stationary() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[1.0]), dm(1, &[0.0])).unwrap();
        let cov0 = DMatrix::<f64>::identity(2, 2) * 0.5;
        let mean0 = DVector::from_row_slice(&[0.0, 0.0]);
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let traj = evolve_moments(&f.generator(), &mean0, &cov0, &times).unwrap();
        for c in &traj.covariances {
            assert!((c - &cov0).norm() < 1e-12);
        }
    }

    #[test]
    fn free_particle_spreading_is_exactly_quadratic() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[0.0]), dm(1, &[0.0])).unwrap();
        let cov0 = dm(2, &[2.0, 0.25, 0.25, 0.5]);
        let mean0 = DVector::from_row_slice(&[1.0, -0.5]);
        let times = [0.0, 1.0, 2.5];
        let traj = evolve_moments(&f.generator(), &mean0, &cov0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let qq = traj.covariances[i][(0, 0)];
            let expect = 2.0 + 2.0 * t * 0.25 + t * t * 0.5;
            assert!((qq - expect).abs() < 1e-12);
            let q = traj.means[i][0];
            assert!((q - (1.0 - 0.5 * t)).abs() < 1e-12);
        }
    }
}
