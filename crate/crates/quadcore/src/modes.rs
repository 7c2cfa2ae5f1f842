//! Normal form of a separable quadratic system: the canonical transform
//! `R = U R'` that turns `h` into a sum of independent single-mode terms
//! `(1/2)(alpha_nu p'_nu^2 + beta_nu q'_nu^2)`, with each mode classified.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::classify::classify_structure;
use crate::error::{Error, Result};
use crate::form::{symplectic_j, QuadraticForm};
use crate::scalar::{as_f64, fr, Real};
use crate::spectral::SpectralDecomposition;

type CMatrix<T> = DMatrix<Complex<T>>;
type CVector<T> = DVector<Complex<T>>;

/// Taxonomy of elementary single-mode quadratic terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    /// `alpha > 0, beta > 0`: stable oscillator, `lambda > 0`.
    Standard,
    /// `alpha < 0, beta < 0`: inverted oscillator, `lambda < 0`, still
    /// dynamically stable.
    Inverted,
    /// `alpha*beta = 0` with one coefficient nonzero: generalized free
    /// particle (standard for `alpha > 0`, inverted for `alpha < 0`).
    Free,
    /// `alpha*beta < 0`: unstable oscillator, imaginary `lambda`.
    Unstable,
    /// `alpha*beta` fully complex: complex normal mode, non-hermitian
    /// coordinates.
    Complex,
    /// `alpha = beta = 0`: both primed operators commute with `h`.
    Vanishing,
}

impl ModeKind {
    fn priority(self) -> u8 {
        match self {
            ModeKind::Standard => 0,
            ModeKind::Inverted => 1,
            ModeKind::Unstable => 2,
            ModeKind::Complex => 3,
            ModeKind::Free => 4,
            ModeKind::Vanishing => 5,
        }
    }
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModeKind::Standard => "standard",
            ModeKind::Inverted => "inverted",
            ModeKind::Free => "free",
            ModeKind::Unstable => "unstable",
            ModeKind::Complex => "complex",
            ModeKind::Vanishing => "vanishing",
        };
        write!(f, "{s}")
    }
}

/// One elementary mode with `alpha beta = lambda^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T: Real> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub lambda: Complex<T>,
    pub kind: ModeKind,
}

/// Canonical mode decomposition: `transform` is the complex `2n x 2n`
/// matrix `U` with `R = U R'` (columns ordered `q'_1..q'_n, p'_1..p'_n`),
/// satisfying `U (iJ) U^t = iJ` and mapping `Hc` to
/// `diag(beta_1..beta_n, alpha_1..alpha_n)`.
#[derive(Debug, Clone)]
pub struct ModeDecomposition<T: Real> {
    pub modes: Vec<Mode<T>>,
    pub transform: CMatrix<T>,
}

impl<T: Real> ModeDecomposition<T> {
    pub fn n(&self) -> usize {
        self.modes.len()
    }
}

struct ModeColumns<T: Real> {
    mode: Mode<T>,
    q_col: CVector<T>,
    p_col: CVector<T>,
}

fn csqrt2<T: Real>() -> Complex<T> {
    Complex::new(fr::<T>(std::f64::consts::SQRT_2), T::zero())
}

fn real_j_product<T: Real>(j: &DMatrix<T>, a: &DVector<T>, b: &DVector<T>) -> T {
    (a.transpose() * j * b)[(0, 0)]
}

/// Bilinear product `a^t (iJ) b` without conjugation.
fn k_product<T: Real>(k: &CMatrix<T>, a: &CVector<T>, b: &CVector<T>) -> Complex<T> {
    let kb = k * b;
    let mut s = Complex::new(T::zero(), T::zero());
    for r in 0..a.len() {
        s += a[r] * kb[r];
    }
    s
}

/// Extract a real orthonormal basis from complex vectors that span a real
/// subspace.
fn realize_basis<T: Real>(cols: &[CVector<T>], floor: T) -> Result<Vec<DVector<T>>> {
    let want = cols.len();
    let mut basis: Vec<DVector<T>> = Vec::new();
    for c in cols {
        for cand in [c.map(|z| z.re), c.map(|z| z.im)] {
            if basis.len() == want {
                break;
            }
            let mut v = cand;
            for b in &basis {
                let coef = b.dot(&v);
                v -= b * coef;
            }
            let nrm = v.norm();
            if nrm > floor {
                basis.push(v / nrm);
            }
        }
    }
    if basis.len() != want {
        return Err(Error::IndeterminateStructure(
            "could not realize a real eigenbasis".into(),
        ));
    }
    Ok(basis)
}

fn to_complex<T: Real>(v: &DVector<T>) -> CVector<T> {
    v.map(|x| Complex::new(x, T::zero()))
}

/// Build the normal form of a separable system from its spectral
/// decomposition. Non-separable inputs are rejected; use the Jordan
/// expansion of the propagator for those.
pub fn normal_form<T: Real>(
    dec: &SpectralDecomposition<T>,
    form: &QuadraticForm<T>,
) -> Result<ModeDecomposition<T>> {
    let report = classify_structure(dec);
    if !report.separable {
        return Err(Error::NonSeparable);
    }
    let n = form.n();
    let dim = 2 * n;
    if dec.w.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: dec.w.nrows(),
        });
    }
    let tol = dec.tol_used;
    let floor = fr::<T>(1e-9).max(tol);
    let j_real = symplectic_j::<T>(n);
    let k_metric: CMatrix<T> = j_real.map(|x| Complex::new(T::zero(), x));

    let mut built: Vec<ModeColumns<T>> = Vec::new();

    // Group nonzero positive-class blocks by eigenfrequency.
    let mut visited = vec![false; dec.blocks.len()];
    for i in 0..dec.blocks.len() {
        if visited[i] {
            continue;
        }
        let lam = dec.blocks[i].lambda;
        if lam.norm() <= tol {
            continue; // zero sector handled separately
        }
        let positive = lam.re > T::zero() || (lam.re == T::zero() && lam.im > T::zero());
        if !positive {
            continue;
        }
        let mut plus_idx = Vec::new();
        let mut minus_idx = Vec::new();
        for (bi, b) in dec.blocks.iter().enumerate() {
            if (b.lambda - lam).norm() <= tol {
                plus_idx.push(bi);
                visited[bi] = true;
            } else if (b.lambda + lam).norm() <= tol {
                minus_idx.push(bi);
                visited[bi] = true;
            }
        }
        if plus_idx.len() != minus_idx.len() {
            return Err(Error::IndeterminateStructure(
                "unbalanced +/- eigenfrequency pair".into(),
            ));
        }
        let u_plus: Vec<CVector<T>> = plus_idx
            .iter()
            .map(|&bi| dec.w.column(dec.blocks[bi].col).into_owned())
            .collect();
        let u_minus: Vec<CVector<T>> = minus_idx
            .iter()
            .map(|&bi| dec.w.column(dec.blocks[bi].col).into_owned())
            .collect();

        let real_lambda = lam.im.abs() <= tol;
        let imag_lambda = lam.re.abs() <= tol;
        if real_lambda {
            built.extend(real_frequency_modes(
                Complex::new(lam.re, T::zero()),
                &u_plus,
                &k_metric,
                floor,
            )?);
        } else if imag_lambda {
            built.extend(imaginary_frequency_modes(
                Complex::new(T::zero(), lam.im),
                &u_plus,
                &u_minus,
                &j_real,
                floor,
            )?);
        } else {
            built.extend(complex_frequency_modes(
                lam, &u_plus, &u_minus, &k_metric, floor,
            )?);
        }
    }

    // Zero sector: free chains and vanishing pairs in real arithmetic.
    let n_free = dec
        .blocks
        .iter()
        .filter(|b| b.dim == 2 && b.lambda.norm() <= tol)
        .count();
    let n_vanishing_cols = dec
        .blocks
        .iter()
        .filter(|b| b.dim == 1 && b.lambda.norm() <= tol)
        .count();
    if n_vanishing_cols % 2 != 0 {
        return Err(Error::IndeterminateStructure(
            "odd number of vanishing columns".into(),
        ));
    }
    if n_free > 0 || n_vanishing_cols > 0 {
        built.extend(zero_sector_modes(
            form,
            n_free,
            n_vanishing_cols / 2,
            &j_real,
            tol,
            floor,
        )?);
    }

    if built.len() != n {
        return Err(Error::IndeterminateStructure(format!(
            "assembled {} modes for {} degrees of freedom",
            built.len(),
            n
        )));
    }

    built.sort_by(|a, b| {
        a.mode
            .kind
            .priority()
            .cmp(&b.mode.kind.priority())
            .then(
                (b.mode.lambda.norm() + b.mode.alpha.norm())
                    .partial_cmp(&(a.mode.lambda.norm() + a.mode.alpha.norm()))
                    .unwrap(),
            )
    });

    let mut transform = CMatrix::<T>::zeros(dim, dim);
    let mut modes = Vec::with_capacity(n);
    for (idx, mc) in built.iter().enumerate() {
        transform.set_column(idx, &mc.q_col);
        transform.set_column(n + idx, &mc.p_col);
        modes.push(mc.mode.clone());
    }
    Ok(ModeDecomposition { modes, transform })
}

/// Real eigenfrequency pairs: the sign of the boson-like norm
/// `r = u^t (iJ) conj(u)` distinguishes standard (`r < 0` for the `+lambda`
/// vector) from inverted modes.
fn real_frequency_modes<T: Real>(
    lam: Complex<T>,
    u_plus: &[CVector<T>],
    k_metric: &CMatrix<T>,
    floor: T,
) -> Result<Vec<ModeColumns<T>>> {
    let m = u_plus.len();
    // Hermitian norm matrix N_ij = u_i^t K conj(u_j); diagonalize to get
    // K-orthogonal columns with definite norm sign.
    let mut nmat = CMatrix::<T>::zeros(m, m);
    for i in 0..m {
        for jj in 0..m {
            nmat[(i, jj)] = k_product(k_metric, &u_plus[i], &u_plus[jj].map(|z| z.conj()));
        }
    }
    let eig = nmat.symmetric_eigen();
    let mut cols: Vec<(T, CVector<T>)> = Vec::new();
    for k in 0..m {
        let d = eig.eigenvalues[k];
        if d.abs() < floor {
            return Err(Error::IndeterminateStructure(
                "degenerate boson-like norm for a real eigenfrequency".into(),
            ));
        }
        let mut v = CVector::<T>::zeros(u_plus[0].len());
        for (l, u) in u_plus.iter().enumerate() {
            let c = eig.eigenvectors[(l, k)];
            v += u.map(|z| z * c);
        }
        let v = v.map(|z| z / Complex::new(d.abs().sqrt(), T::zero()));
        cols.push((d.signum(), v));
    }
    let s2 = csqrt2::<T>();
    let mut out = Vec::new();
    for (sign, u) in cols {
        let ubar = u.map(|z| z.conj());
        let (u_b, u_bb, lam_mode) = if sign < T::zero() {
            (u.clone(), ubar, lam)
        } else {
            (ubar, u.clone(), -lam)
        };
        let q_col = (&u_b + &u_bb) / s2;
        let p_col = (&u_b - &u_bb).map(|z| z * Complex::new(T::zero(), T::one())) / s2;
        let kind = if lam_mode.re > T::zero() {
            ModeKind::Standard
        } else {
            ModeKind::Inverted
        };
        out.push(ModeColumns {
            mode: Mode {
                alpha: lam_mode,
                beta: lam_mode,
                lambda: lam_mode,
                kind,
            },
            q_col,
            p_col,
        });
    }
    Ok(out)
}

/// Imaginary eigenfrequency pairs (unstable oscillators), built from the
/// real eigenvectors of `G` and rescaled to the hermitian representation
/// `alpha = |lambda|`, `beta = -|lambda|`.
fn imaginary_frequency_modes<T: Real>(
    lam: Complex<T>,
    u_plus: &[CVector<T>],
    u_minus: &[CVector<T>],
    j_real: &DMatrix<T>,
    floor: T,
) -> Result<Vec<ModeColumns<T>>> {
    let x_plus = realize_basis(u_plus, floor)?;
    let mut x_minus = realize_basis(u_minus, floor)?;
    let m = x_plus.len();
    // Real pairing X_plus_i^t J X_minus_j normalized to the identity.
    let mut pr = DMatrix::<T>::zeros(m, m);
    for i in 0..m {
        for jj in 0..m {
            pr[(i, jj)] = real_j_product(j_real, &x_plus[i], &x_minus[jj]);
        }
    }
    let inv = pr.clone().lu().try_inverse().ok_or_else(|| {
        Error::IndeterminateStructure("degenerate pairing of unstable modes".into())
    })?;
    let old = x_minus.clone();
    for (jj, slot) in x_minus.iter_mut().enumerate() {
        let mut acc = DVector::<T>::zeros(old[0].len());
        for (l, o) in old.iter().enumerate() {
            acc += o * inv[(l, jj)];
        }
        *slot = acc;
    }
    let s = lam.im.abs();
    let a = T::one() / fr::<T>(2.0).sqrt();
    let mut out = Vec::new();
    for i in 0..m {
        let q_col = to_complex(&((&x_plus[i] - &x_minus[i]) * a));
        let p_col = to_complex(&((&x_plus[i] + &x_minus[i]) * a));
        out.push(ModeColumns {
            mode: Mode {
                alpha: Complex::new(s, T::zero()),
                beta: Complex::new(-s, T::zero()),
                lambda: Complex::new(T::zero(), s),
                kind: ModeKind::Unstable,
            },
            q_col,
            p_col,
        });
    }
    Ok(out)
}

/// Fully complex eigenfrequencies: complex normal modes with non-hermitian
/// canonical coordinates.
fn complex_frequency_modes<T: Real>(
    lam: Complex<T>,
    u_plus: &[CVector<T>],
    u_minus: &[CVector<T>],
    k_metric: &CMatrix<T>,
    floor: T,
) -> Result<Vec<ModeColumns<T>>> {
    let m = u_plus.len();
    let mut pairing = CMatrix::<T>::zeros(m, m);
    for i in 0..m {
        for jj in 0..m {
            pairing[(i, jj)] = k_product(k_metric, &u_plus[i], &u_minus[jj]);
        }
    }
    let det_small = pairing.norm() < floor;
    let inv = pairing.clone().lu().try_inverse();
    let inv = match (det_small, inv) {
        (false, Some(p)) => p,
        _ => {
            return Err(Error::IndeterminateStructure(
                "degenerate pairing of complex modes".into(),
            ))
        }
    };
    let x = -inv;
    let old = u_minus.to_vec();
    let mut u_minus_n = Vec::with_capacity(m);
    for jj in 0..m {
        let mut acc = CVector::<T>::zeros(old[0].len());
        for (l, o) in old.iter().enumerate() {
            let c = x[(l, jj)];
            acc += o.map(|z| z * c);
        }
        u_minus_n.push(acc);
    }
    let s2 = csqrt2::<T>();
    let i_unit = Complex::new(T::zero(), T::one());
    let mut out = Vec::new();
    for idx in 0..m {
        let q_col = (&u_plus[idx] + &u_minus_n[idx]) / s2;
        let p_col = (&u_plus[idx] - &u_minus_n[idx]).map(|z| z * i_unit) / s2;
        out.push(ModeColumns {
            mode: Mode {
                alpha: lam,
                beta: lam,
                lambda: lam,
                kind: ModeKind::Complex,
            },
            q_col,
            p_col,
        });
    }
    Ok(out)
}

/// Free chains and vanishing pairs, extracted from the real kernels of `G`
/// and `G^2` with symplectic Gram-Schmidt.
fn zero_sector_modes<T: Real>(
    form: &QuadraticForm<T>,
    n_free: usize,
    n_vanishing: usize,
    j_real: &DMatrix<T>,
    tol: T,
    floor: T,
) -> Result<Vec<ModeColumns<T>>> {
    let g = form.generator();
    let dim = g.nrows();
    let kernel = |mat: &DMatrix<T>, want: usize| -> Result<Vec<DVector<T>>> {
        let svd = mat.clone().svd(false, true);
        let vt = svd.v_t.as_ref().unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
        let thresh = tol * T::one().max(svd.singular_values.max());
        let mut out = Vec::new();
        for &i in &order {
            if svd.singular_values[i] <= thresh {
                out.push(vt.row(i).transpose());
            }
        }
        if out.len() != want {
            return Err(Error::IndeterminateStructure(format!(
                "zero-sector kernel dimension {} does not match block profile {want}",
                out.len()
            )));
        }
        Ok(out)
    };
    let k1 = kernel(&g, n_free + 2 * n_vanishing)?;
    let mut out = Vec::new();

    // pairs established so far, as real columns
    let mut pairs: Vec<(DVector<T>, DVector<T>)> = Vec::new();
    let project_pairs = |v: &mut DVector<T>, pairs: &[(DVector<T>, DVector<T>)]| {
        for (cq, cp) in pairs {
            let a = real_j_product(j_real, v, cp);
            let b = real_j_product(j_real, v, cq);
            *v -= cq * a;
            *v += cp * b;
        }
    };

    if n_free > 0 {
        let g2 = &g * &g;
        let k2 = kernel(&g2, 2 * n_free + 2 * n_vanishing)?;
        // chain tops: K2 directions independent of K1
        let mut tops: Vec<DVector<T>> = Vec::new();
        let mut frame: Vec<DVector<T>> = k1.clone();
        for cand in &k2 {
            if tops.len() == n_free {
                break;
            }
            let mut v = cand.clone();
            for b in &frame {
                let c = b.dot(&v) / b.dot(b);
                v -= b * c;
            }
            let nrm = v.norm();
            if nrm > floor {
                let v = v / nrm;
                frame.push(v.clone());
                tops.push(v);
            }
        }
        if tops.len() != n_free {
            return Err(Error::IndeterminateStructure(
                "could not separate free-particle chain tops".into(),
            ));
        }
        for mut t in tops {
            project_pairs(&mut t, &pairs);
            let b = &g * &t;
            let gg = real_j_product(j_real, &b, &t);
            if gg.abs() < floor {
                return Err(Error::IndeterminateStructure(
                    "free-particle chain is symplectically degenerate".into(),
                ));
            }
            let q_col = &b / gg;
            let p_col = t.clone();
            out.push(ModeColumns {
                mode: Mode {
                    alpha: Complex::new(gg, T::zero()),
                    beta: Complex::new(T::zero(), T::zero()),
                    lambda: Complex::new(T::zero(), T::zero()),
                    kind: ModeKind::Free,
                },
                q_col: to_complex(&q_col),
                p_col: to_complex(&p_col),
            });
            pairs.push((q_col, p_col));
        }
    }

    if n_vanishing > 0 {
        // The vanishing subspace: K1 directions euclidean-orthogonal to the
        // free q-columns, then symplectically decoupled from the chains.
        let free_q: Vec<DVector<T>> = pairs.iter().map(|(q, _)| q.clone()).collect();
        let mut pool: Vec<DVector<T>> = Vec::new();
        let mut frame: Vec<DVector<T>> = free_q.clone();
        for cand in &k1 {
            if pool.len() == 2 * n_vanishing {
                break;
            }
            let mut v = cand.clone();
            for b in &frame {
                let c = b.dot(&v) / b.dot(b);
                v -= b * c;
            }
            let nrm = v.norm();
            if nrm > floor {
                let v = v / nrm;
                frame.push(v.clone());
                pool.push(v);
            }
        }
        if pool.len() != 2 * n_vanishing {
            return Err(Error::IndeterminateStructure(
                "vanishing subspace has unexpected dimension".into(),
            ));
        }
        for v in pool.iter_mut() {
            project_pairs(v, &pairs);
        }
        let mut vanish_pairs: Vec<(DVector<T>, DVector<T>)> = Vec::new();
        while !pool.is_empty() {
            let u = pool.swap_remove(0);
            let mut best: Option<(usize, T)> = None;
            for (i, w) in pool.iter().enumerate() {
                let p = real_j_product(j_real, &u, w).abs();
                if best.map_or(true, |(_, bp)| p > bp) {
                    best = Some((i, p));
                }
            }
            let Some((i, p)) = best else {
                return Err(Error::IndeterminateStructure(
                    "unpaired vanishing direction".into(),
                ));
            };
            if p < floor {
                return Err(Error::IndeterminateStructure(
                    "vanishing subspace is symplectically degenerate".into(),
                ));
            }
            let w = pool.swap_remove(i);
            let scale = real_j_product(j_real, &u, &w);
            let w = w / scale;
            for v in pool.iter_mut() {
                let a = real_j_product(j_real, v, &w);
                let b = real_j_product(j_real, v, &u);
                *v -= &u * a;
                *v += &w * b;
            }
            vanish_pairs.push((u, w));
        }
        for (u, w) in vanish_pairs {
            out.push(ModeColumns {
                mode: Mode {
                    alpha: Complex::new(T::zero(), T::zero()),
                    beta: Complex::new(T::zero(), T::zero()),
                    lambda: Complex::new(T::zero(), T::zero()),
                    kind: ModeKind::Vanishing,
                },
                q_col: to_complex(&u),
                p_col: to_complex(&w),
            });
        }
    }
    Ok(out)
}

/// Discrete spectrum `E = sum_nu lambda_nu (n_nu + 1/2)` of a dynamically
/// stable decomposition; only standard, inverted and vanishing modes carry
/// a real level structure.
pub fn spectrum_levels<T: Real>(modes: &ModeDecomposition<T>, quanta: &[u32]) -> Result<T> {
    if quanta.len() != modes.modes.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.modes.len(),
            got: quanta.len(),
        });
    }
    for m in &modes.modes {
        match m.kind {
            ModeKind::Standard | ModeKind::Inverted | ModeKind::Vanishing => {}
            other => {
                return Err(Error::NoDiscreteSpectrum(format!(
                    "mode of kind {other} (lambda = {:.4e} + {:.4e}i) has no real level set",
                    as_f64(m.lambda.re),
                    as_f64(m.lambda.im)
                )));
            }
        }
    }
    let half = fr::<T>(0.5);
    let mut e = T::zero();
    for (m, &nq) in modes.modes.iter().zip(quanta) {
        e += m.lambda.re * (fr::<T>(nq as f64) + half);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{default_tol, spectral};

    fn dm(n: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, data)
    }

    fn modes_of(form: &QuadraticForm<f64>) -> ModeDecomposition<f64> {
        let dec = spectral(&form.generator(), default_tol()).unwrap();
        normal_form(&dec, form).unwrap()
    }

    fn check_invariants(form: &QuadraticForm<f64>, md: &ModeDecomposition<f64>, tol: f64) {
        let n = form.n();
        let k: CMatrix<f64> = symplectic_j::<f64>(n).map(|x| Complex::new(0.0, x));
        let canon = (&md.transform * &k * md.transform.transpose() - &k).norm();
        assert!(canon < tol, "canonical residual {canon}");
        let h = form.hamiltonian_matrix().map(|x| Complex::new(x, 0.0));
        let hp = md.transform.transpose() * h * &md.transform;
        let mut offdiag: f64 = 0.0;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i != j {
                    offdiag = offdiag.max(hp[(i, j)].norm());
                }
            }
        }
        assert!(offdiag < tol, "off-diagonal mass {offdiag}");
        for (idx, m) in md.modes.iter().enumerate() {
            assert!((hp[(idx, idx)] - m.beta).norm() < tol, "beta mismatch");
            assert!((hp[(n + idx, n + idx)] - m.alpha).norm() < tol, "alpha mismatch");
            assert!((m.alpha * m.beta - m.lambda * m.lambda).norm() < tol);
        }
    }

    #[test]
    fn angular_momentum_splits_into_standard_plus_inverted() {
        let u = dm(2, &[0.0, 1.0, -1.0, 0.0]);
        let f = QuadraticForm::assemble(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), u).unwrap();
        let md = modes_of(&f);
        let kinds: Vec<ModeKind> = md.modes.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![ModeKind::Standard, ModeKind::Inverted]);
        assert!((md.modes[0].lambda - Complex::new(1.0, 0.0)).norm() < 1e-9);
        assert!((md.modes[1].lambda - Complex::new(-1.0, 0.0)).norm() < 1e-9);
        check_invariants(&f, &md, 1e-9);
        // hermitian columns for a dynamically stable form
        let im = md.transform.map(|z| z.im).norm();
        assert!(im < 1e-9);
    }

    #[test]
    fn saddle_is_standard_plus_unstable() {
        // omega = 0, k_x = 1, k_y = -1
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[1.0, 0.0, 0.0, -1.0]),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let md = modes_of(&f);
        let kinds: Vec<ModeKind> = md.modes.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![ModeKind::Standard, ModeKind::Unstable]);
        assert!((md.modes[0].lambda - Complex::new(1.0, 0.0)).norm() < 1e-9);
        assert!((md.modes[1].lambda - Complex::new(0.0, 1.0)).norm() < 1e-9);
        assert!((md.modes[1].alpha - Complex::new(1.0, 0.0)).norm() < 1e-9);
        assert!((md.modes[1].beta - Complex::new(-1.0, 0.0)).norm() < 1e-9);
        check_invariants(&f, &md, 1e-9);
        let im = md.transform.map(|z| z.im).norm();
        assert!(im < 1e-9, "kind-iv hermitian rescaling should be real");
    }

    #[test]
    fn landau_is_standard_plus_vanishing() {
        // k_x = k_y = 0, omega = 0.5
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[0.25, 0.0, 0.0, 0.25]),
            dm(2, &[0.0, -0.5, 0.5, 0.0]),
        )
        .unwrap();
        let md = modes_of(&f);
        let kinds: Vec<ModeKind> = md.modes.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![ModeKind::Standard, ModeKind::Vanishing]);
        assert!((md.modes[0].lambda - Complex::new(1.0, 0.0)).norm() < 1e-9);
        assert!(md.modes[1].lambda.norm() < 1e-9);
        check_invariants(&f, &md, 1e-8);
    }

    #[test]
    fn free_particle_mode() {
        let f = QuadraticForm::assemble(dm(1, &[2.0]), dm(1, &[0.0]), dm(1, &[0.0])).unwrap();
        let md = modes_of(&f);
        assert_eq!(md.modes[0].kind, ModeKind::Free);
        assert!((md.modes[0].alpha - Complex::new(2.0, 0.0)).norm() < 1e-10);
        assert!(md.modes[0].beta.norm() < 1e-10);
        check_invariants(&f, &md, 1e-9);
    }

    #[test]
    fn two_free_particles() {
        let f = QuadraticForm::assemble(
            dm(2, &[1.0, 0.0, 0.0, 3.0]),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let md = modes_of(&f);
        assert!(md.modes.iter().all(|m| m.kind == ModeKind::Free));
        check_invariants(&f, &md, 1e-9);
    }

    #[test]
    fn free_plus_vanishing() {
        // h = p_1^2/2 only: one free mode and one fully vanishing pair.
        let f = QuadraticForm::assemble(
            dm(2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let md = modes_of(&f);
        let kinds: Vec<ModeKind> = md.modes.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![ModeKind::Free, ModeKind::Vanishing]);
        check_invariants(&f, &md, 1e-9);
    }

    #[test]
    fn e_region_complex_modes() {
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[0.0, 0.0, 0.0, -3.0]),
            dm(2, &[0.0, -1.0, 1.0, 0.0]),
        )
        .unwrap();
        let md = modes_of(&f);
        assert!(md.modes.iter().all(|m| m.kind == ModeKind::Complex));
        check_invariants(&f, &md, 1e-9);
    }

    #[test]
    fn rejects_non_separable() {
        // j-curve point
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[1.25, 0.0, 0.0, -1.75]),
            dm(2, &[0.0, -1.5, 1.5, 0.0]),
        )
        .unwrap();
        let dec = spectral(&f.generator(), default_tol()).unwrap();
        assert!(matches!(normal_form(&dec, &f), Err(Error::NonSeparable)));
    }

    #[test]
    fn oscillator_levels() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[1.0]), dm(1, &[0.0])).unwrap();
        let md = modes_of(&f);
        for nq in 0..3u32 {
            let e = spectrum_levels(&md, &[nq]).unwrap();
            assert!((e - (nq as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn landau_levels_ignore_the_vanishing_mode() {
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[0.25, 0.0, 0.0, 0.25]),
            dm(2, &[0.0, -0.5, 0.5, 0.0]),
        )
        .unwrap();
        let md = modes_of(&f);
        let ground = spectrum_levels(&md, &[0, 0]).unwrap();
        assert!((ground - 0.5).abs() < 1e-9);
        let shifted = spectrum_levels(&md, &[0, 7]).unwrap();
        assert!((shifted - 0.5).abs() < 1e-9, "independent of the vanishing quanta");
    }

    #[test]
    fn unstable_input_has_no_levels() {
        let f = QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[1.0, 0.0, 0.0, -1.0]),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let md = modes_of(&f);
        assert!(matches!(
            spectrum_levels(&md, &[0, 0]),
            Err(Error::NoDiscreteSpectrum(_))
        ));
    }
}
