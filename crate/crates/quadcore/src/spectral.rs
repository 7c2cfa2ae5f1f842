//! Spectral analysis of the equation-of-motion generator: eigenfrequencies,
//! Jordan block structure and the generalized eigenvector matrix `W` of the
//! RPA matrix `i*G`.
//!
//! Numerical Jordan detection is ill-posed, so the analysis runs a tolerance
//! ladder: eigenvalues are clustered at `tol`, the rank staircase and chain
//! construction are attempted, and every rank decision is audited. If any
//! decision is ambiguous (a singular value within a factor 10 of the
//! threshold), if multiplicities are inconsistent, or if the reconstruction
//! residual is out of budget, the clustering tolerance is escalated by a
//! factor 10 and the analysis repeats. The first fully validated level wins
//! and is reported in `tol_used`. A silent wrong answer is never returned:
//! exhausting the ladder is an explicit error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::form::symplectic_j;
use crate::scalar::{as_f64, fr, Real};

type CMatrix<T> = DMatrix<Complex<T>>;
type CVector<T> = DVector<Complex<T>>;

/// Default relative clustering tolerance.
pub fn default_tol<T: Real>() -> T {
    fr(1e-8)
}

const LADDER_STEPS: usize = 7;
const AMBIGUITY_FACTOR: f64 = 10.0;
const RESIDUAL_BUDGET_FACTOR: f64 = 1e3;
const PIVOT_FLOOR: f64 = 1e-6;

/// One Jordan block of the RPA matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanBlock<T: Real> {
    /// Eigenfrequency carried by the block.
    pub lambda: Complex<T>,
    /// Block dimension (1 for a plain eigenvector).
    pub dim: usize,
    /// First column of the block's chain in `w`.
    pub col: usize,
}

/// Eigen-structure of the RPA matrix `i*G`: eigenfrequencies with
/// multiplicity, Jordan block profile and the generalized eigenvector
/// matrix with its inverse.
///
/// Columns of `w` are chains: `(iG) w_1 = lambda w_1` and
/// `(iG) w_k = lambda w_k + w_{k-1}` inside a block. In fully
/// diagonalizable cases the columns are ordered and scaled so that the
/// generalized normal operators `Z' = w^{-1} R` satisfy boson-like pairing:
/// `w^{-1} (iJ) w^{-t} = J` with the `(b', bbar')` column split.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    /// All `2n` eigenfrequencies, aligned with the columns of `w`.
    pub eigenfrequencies: Vec<Complex<T>>,
    /// Jordan blocks in column order.
    pub blocks: Vec<JordanBlock<T>>,
    /// Generalized eigenvector matrix of `i*G`.
    pub w: CMatrix<T>,
    /// Inverse of `w`.
    pub w_inv: CMatrix<T>,
    /// Absolute clustering/rank tolerance that validated.
    pub tol_used: T,
}

impl<T: Real> SpectralDecomposition<T> {
    /// `(lambda, dim)` pairs in column order.
    pub fn block_profile(&self) -> Vec<(Complex<T>, usize)> {
        self.blocks.iter().map(|b| (b.lambda, b.dim)).collect()
    }

    /// True when every block is one-dimensional.
    pub fn is_diagonalizable(&self) -> bool {
        self.blocks.iter().all(|b| b.dim == 1)
    }

    /// The block-diagonal Jordan matrix of `i*G` in the basis of `w`.
    pub fn jordan_matrix(&self) -> CMatrix<T> {
        let dim = self.w.nrows();
        let mut jm = CMatrix::<T>::zeros(dim, dim);
        for b in &self.blocks {
            for k in 0..b.dim {
                jm[(b.col + k, b.col + k)] = b.lambda;
                if k + 1 < b.dim {
                    jm[(b.col + k, b.col + k + 1)] = Complex::new(T::one(), T::zero());
                }
            }
        }
        jm
    }
}

/// Short-lived failure inside one ladder level.
enum LevelFail {
    Ambiguous(String),
    Inconsistent(String),
}

impl LevelFail {
    fn msg(self) -> String {
        match self {
            LevelFail::Ambiguous(s) | LevelFail::Inconsistent(s) => s,
        }
    }
}

type LevelResult<X> = std::result::Result<X, LevelFail>;

fn is_positive_class<T: Real>(z: Complex<T>) -> bool {
    z.re > T::zero() || (z.re == T::zero() && z.im > T::zero())
}

/// Singular values in descending order plus the right-singular basis.
fn svd_sorted<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let sv: Vec<T> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<CVector<T>> = idx
        .iter()
        .map(|&i| vt.row(i).map(|z| z.conj()).transpose())
        .collect();
    let v = CMatrix::from_columns(&cols);
    (sv, v)
}

/// Rank decision with an explicit ambiguity audit: any singular value
/// within `AMBIGUITY_FACTOR` of the threshold poisons the decision.
fn audited_nullity<T: Real>(sv: &[T], thresh: T, what: &str) -> LevelResult<usize> {
    let lo = thresh / fr(AMBIGUITY_FACTOR);
    let hi = thresh * fr(AMBIGUITY_FACTOR);
    for &s in sv {
        if s > lo && s < hi {
            return Err(LevelFail::Ambiguous(format!(
                "rank decision for {what}: singular value {:.3e} within 10x of threshold {:.3e}",
                as_f64(s),
                as_f64(thresh)
            )));
        }
    }
    Ok(sv.iter().filter(|&&s| s <= thresh).count())
}

/// Orthonormal kernel basis of `m` at the given threshold.
fn kernel_basis<T: Real>(m: &CMatrix<T>, rel_tol: T, what: &str) -> LevelResult<Vec<CVector<T>>> {
    let (sv, v) = svd_sorted(m);
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    let thresh = rel_tol * T::one().max(smax);
    let nul = audited_nullity(&sv, thresh, what)?;
    let ncols = v.ncols();
    Ok((0..nul).map(|k| v.column(ncols - 1 - k).into_owned()).collect())
}

/// Remove from `v` its projection on the orthonormal set `basis`.
fn project_out<T: Real>(v: &mut CVector<T>, basis: &[CVector<T>]) {
    for b in basis {
        let c = b.dotc(v);
        *v -= b.map(|x| x * c);
    }
}

/// Phase convention: rotate so the entry of largest modulus is real
/// positive, then normalize to unit length.
fn phase_fix<T: Real>(v: &CVector<T>) -> CVector<T> {
    let mut best = 0usize;
    let mut mag = T::zero();
    for (i, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > mag {
            mag = m;
            best = i;
        }
    }
    let z = v[best];
    let r = z.norm();
    let phase = if r > T::zero() {
        z.conj() / Complex::new(r, T::zero())
    } else {
        Complex::new(T::one(), T::zero())
    };
    let nrm = v.norm();
    v.map(|x| x * phase / Complex::new(nrm, T::zero()))
}

struct Cluster<T: Real> {
    lambda: Complex<T>,
    indices: Vec<usize>,
}

/// Agglomerative single-linkage clustering of the eigenfrequencies.
fn cluster_eigenvalues<T: Real>(lams: &[Complex<T>], abs_tol: T) -> Vec<Cluster<T>> {
    let mut clusters: Vec<Vec<usize>> = (0..lams.len()).map(|i| vec![i]).collect();
    loop {
        let mut merge: Option<(usize, usize)> = None;
        'outer: for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let close = clusters[a].iter().any(|&i| {
                    clusters[b]
                        .iter()
                        .any(|&j| (lams[i] - lams[j]).norm() <= abs_tol)
                });
                if close {
                    merge = Some((a, b));
                    break 'outer;
                }
            }
        }
        match merge {
            Some((a, b)) => {
                let moved = clusters.swap_remove(b);
                clusters[a].extend(moved);
            }
            None => break,
        }
    }
    clusters
        .into_iter()
        .map(|indices| {
            let mut sum = Complex::new(T::zero(), T::zero());
            for &i in &indices {
                sum += lams[i];
            }
            let len = fr::<T>(indices.len() as f64);
            Cluster {
                lambda: sum / Complex::new(len, T::zero()),
                indices,
            }
        })
        .collect()
}

/// Snap near-axis representatives and enforce exact `+/-` pair symmetry on
/// the cluster representatives. Fails the level when pairing is violated.
fn symmetrize_pairs<T: Real>(
    clusters: &mut [Cluster<T>],
    abs_tol: T,
) -> LevelResult<()> {
    let snap = abs_tol;
    for c in clusters.iter_mut() {
        if c.lambda.re.abs() <= snap {
            c.lambda.re = T::zero();
        }
        if c.lambda.im.abs() <= snap {
            c.lambda.im = T::zero();
        }
    }
    let m = clusters.len();
    let mut paired = vec![false; m];
    let match_tol = abs_tol * fr(10.0);
    for i in 0..m {
        if paired[i] {
            continue;
        }
        if clusters[i].lambda.norm() == T::zero() {
            paired[i] = true;
            continue;
        }
        let mut best: Option<(usize, T)> = None;
        for j in 0..m {
            if j == i || paired[j] {
                continue;
            }
            let d = (clusters[i].lambda + clusters[j].lambda).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let Some((j, d)) = best else {
            return Err(LevelFail::Inconsistent(format!(
                "eigenfrequency {:?} has no negative partner",
                clusters[i].lambda
            )));
        };
        if d > match_tol || clusters[i].indices.len() != clusters[j].indices.len() {
            return Err(LevelFail::Inconsistent(format!(
                "pair symmetry violated at {:.3e}",
                as_f64(d)
            )));
        }
        let (pos, neg) = if is_positive_class(clusters[i].lambda) {
            (i, j)
        } else {
            (j, i)
        };
        let rep = (clusters[pos].lambda - clusters[neg].lambda)
            / Complex::new(fr(2.0), T::zero());
        clusters[pos].lambda = rep;
        clusters[neg].lambda = -rep;
        paired[i] = true;
        paired[j] = true;
    }
    Ok(())
}

struct ClusterStructure<T: Real> {
    lambda: Complex<T>,
    /// Chains, outer index = chain; inner vectors ordered bottom (eigvec)
    /// to top.
    chains: Vec<Vec<CVector<T>>>,
}

/// Rank staircase plus Jordan chain construction for one eigenvalue
/// cluster.
fn cluster_chains<T: Real>(
    htilde: &CMatrix<T>,
    lambda: Complex<T>,
    multiplicity: usize,
    rel_tol: T,
) -> LevelResult<ClusterStructure<T>> {
    let dim = htilde.nrows();
    let ident = CMatrix::<T>::identity(dim, dim);
    let b = htilde - &ident * lambda;

    // Nested kernels of B^k with audited rank decisions.
    let mut kernels: Vec<Vec<CVector<T>>> = Vec::new();
    let mut power = b.clone();
    loop {
        let k = kernels.len() + 1;
        let what = format!("(iG - lambda)^{k}");
        let ker = kernel_basis(&power, rel_tol, &what)?;
        let nul = ker.len();
        let prev = kernels.last().map_or(0, |v| v.len());
        if nul > multiplicity {
            return Err(LevelFail::Inconsistent(format!(
                "nullity {nul} exceeds cluster multiplicity {multiplicity}"
            )));
        }
        if nul <= prev {
            return Err(LevelFail::Inconsistent(format!(
                "staircase stalled at nullity {nul} below multiplicity {multiplicity}"
            )));
        }
        kernels.push(ker);
        if nul == multiplicity {
            break;
        }
        if k > multiplicity {
            return Err(LevelFail::Inconsistent("staircase exceeded multiplicity".into()));
        }
        power = &power * &b;
    }

    let p = kernels.len();
    let nullity = |k: usize| -> usize {
        if k == 0 {
            0
        } else {
            kernels[k - 1].len()
        }
    };
    // ge[k] = number of blocks of size >= k, for k = 1..=p.
    let ge: Vec<usize> = (1..=p).map(|k| nullity(k) - nullity(k - 1)).collect();
    for w in ge.windows(2) {
        if w[1] > w[0] {
            return Err(LevelFail::Inconsistent(
                "non-monotone block profile in staircase".into(),
            ));
        }
    }

    let floor = fr::<T>(PIVOT_FLOOR);
    let mut tops: Vec<CVector<T>> = Vec::new();
    let mut chain_heights: Vec<usize> = Vec::new();
    // Vectors of alive chains at the current height, descended level by
    // level; `established` tracks an orthonormal frame of everything the
    // next candidate must be independent of.
    let mut active_vecs: Vec<CVector<T>> = Vec::new();
    for k in (1..=p).rev() {
        if k < p {
            for v in active_vecs.iter_mut() {
                *v = &b * &*v;
            }
        }
        let mut established: Vec<CVector<T>> = Vec::new();
        if k >= 2 {
            established.extend(kernels[k - 2].iter().cloned());
        }
        for v in &active_vecs {
            let mut r = v.clone();
            project_out(&mut r, &established);
            let rn = r.norm();
            if rn < floor * T::one().max(v.norm()) {
                return Err(LevelFail::Inconsistent(
                    "jordan chain collapsed during descent".into(),
                ));
            }
            established.push(r.map(|z| z / Complex::new(rn, T::zero())));
        }
        let need = ge[k - 1] - if k < p { ge[k] } else { 0 };
        for _ in 0..need {
            let mut best: Option<(T, CVector<T>)> = None;
            for cand in &kernels[k - 1] {
                let mut r = cand.clone();
                project_out(&mut r, &established);
                let rn = r.norm();
                if best.as_ref().map_or(true, |(bn, _)| rn > *bn) {
                    best = Some((rn, r));
                }
            }
            let (rn, r) = best.expect("kernel basis cannot be empty here");
            if rn < floor {
                return Err(LevelFail::Ambiguous(
                    "degenerate pivot while selecting a chain top".into(),
                ));
            }
            let top = r.map(|z| z / Complex::new(rn, T::zero()));
            established.push(top.clone());
            active_vecs.push(top.clone());
            tops.push(top);
            chain_heights.push(k);
        }
    }

    // Expand each chain from its top: members B^j(top), stored bottom-up.
    let mut expanded: Vec<Vec<CVector<T>>> = Vec::new();
    for (top, &height) in tops.iter().zip(&chain_heights) {
        let mut members = vec![top.clone()];
        for _ in 1..height {
            let next = &b * members.last().unwrap();
            members.push(next);
        }
        members.reverse(); // eigenvector first
        // Normalize the whole chain by the eigenvector, with the phase
        // convention applied to the eigenvector.
        let eig = &members[0];
        let nrm = eig.norm();
        if nrm < floor {
            return Err(LevelFail::Inconsistent("vanishing chain eigenvector".into()));
        }
        let fixed = phase_fix(eig);
        // factor such that eig * factor = fixed
        let mut best = 0usize;
        let mut mag = T::zero();
        for (i, z) in eig.iter().enumerate() {
            if z.norm_sqr() > mag {
                mag = z.norm_sqr();
                best = i;
            }
        }
        let factor = fixed[best] / eig[best];
        expanded.push(members.into_iter().map(|v| v.map(|z| z * factor)).collect());
    }

    Ok(ClusterStructure {
        lambda,
        chains: expanded,
    })
}

/// Pair the `+lambda` eigenvector set against the `-lambda` set so that
/// `U_plus^t (iJ) U_minus = -I`, the boson-like duality.
fn normalize_pairing<T: Real>(
    u_plus: &mut Vec<CVector<T>>,
    u_minus: &mut Vec<CVector<T>>,
    k_metric: &CMatrix<T>,
) -> LevelResult<()> {
    let m = u_plus.len();
    let mut pairing = CMatrix::<T>::zeros(m, m);
    for (i, up) in u_plus.iter().enumerate() {
        let ku = k_metric * up;
        for (j, um) in u_minus.iter().enumerate() {
            // up^t K um  (bilinear, no conjugation)
            let mut s = Complex::new(T::zero(), T::zero());
            for r in 0..ku.len() {
                s += ku[r] * um[r];
            }
            pairing[(j, i)] = s; // pairing^t layout: column i holds up_i products
        }
    }
    // pairing holds M^t with M_ij = up_i^t K um_j; we need U_minus <- -U_minus M^{-1}.
    let m_mat = pairing.transpose();
    let inv = m_mat.clone().lu().try_inverse().ok_or_else(|| {
        LevelFail::Inconsistent("singular pairing between +/- eigenvector sets".into())
    })?;
    let x = -inv;
    let old: Vec<CVector<T>> = u_minus.clone();
    for (j, slot) in u_minus.iter_mut().enumerate() {
        let mut acc = CVector::<T>::zeros(old[0].len());
        for (l, o) in old.iter().enumerate() {
            let c = x[(l, j)];
            acc += o.map(|z| z * c);
        }
        *slot = acc;
    }
    Ok(())
}

/// Symplectic Gram-Schmidt pairing of a diagonalizable zero-frequency
/// subspace: returns `(plus, minus)` columns with `p_i^t K m_j = -delta`.
fn pair_zero_modes<T: Real>(
    cols: Vec<CVector<T>>,
    k_metric: &CMatrix<T>,
) -> LevelResult<(Vec<CVector<T>>, Vec<CVector<T>>)> {
    let mut pool = cols;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let floor = fr::<T>(PIVOT_FLOOR);
    while !pool.is_empty() {
        if pool.len() == 1 {
            return Err(LevelFail::Inconsistent(
                "odd-dimensional zero-frequency subspace cannot be paired".into(),
            ));
        }
        let a = phase_fix(&pool.swap_remove(0));
        let ka = k_metric * &a;
        let mut best: Option<(usize, Complex<T>)> = None;
        for (idx, v) in pool.iter().enumerate() {
            let mut s = Complex::new(T::zero(), T::zero());
            for r in 0..ka.len() {
                s += ka[r] * v[r];
            }
            if best.as_ref().map_or(true, |(_, bs)| s.norm() > bs.norm()) {
                best = Some((idx, s));
            }
        }
        let (idx, s) = best.unwrap();
        if s.norm() < floor {
            return Err(LevelFail::Inconsistent(
                "zero-frequency subspace is symplectically degenerate".into(),
            ));
        }
        let partner = pool.swap_remove(idx);
        // scale partner so a^t K partner = -1
        let scale = -s.inv();
        let partner = partner.map(|z| z * scale);
        let kp = k_metric * &partner;
        // Symplectic projection: with a^t K partner = -1 the correction
        // v' = v - (partner^t K v) a + (a^t K v) partner
        // makes a^t K v' = 0 and partner^t K v' = 0.
        for v in pool.iter_mut() {
            let mut sa = Complex::new(T::zero(), T::zero());
            let mut sp = Complex::new(T::zero(), T::zero());
            for r in 0..ka.len() {
                sa += ka[r] * v[r]; // a^t K v
                sp += kp[r] * v[r]; // partner^t K v
            }
            *v -= a.map(|z| z * sp);
            *v += partner.map(|z| z * sa);
        }
        plus.push(a);
        minus.push(partner);
    }
    Ok((plus, minus))
}

/// Full analysis of a real generator `G` (with `J*G` symmetric).
pub fn spectral<T: Real>(g: &DMatrix<T>, tol: T) -> Result<SpectralDecomposition<T>> {
    let dim = g.nrows();
    if dim == 0 || dim % 2 != 0 || g.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim + dim % 2,
            got: g.ncols(),
        });
    }
    let n = dim / 2;
    let jg = symplectic_j::<T>(n) * g;
    let asym = (&jg - jg.transpose()).norm() / T::one().max(jg.norm());
    if asym > fr(1e-8) {
        return Err(Error::NotRpaGenerator {
            deviation: as_f64(asym),
        });
    }
    if tol <= T::zero() {
        return Err(Error::IndeterminateStructure("tolerance must be positive".into()));
    }

    let scale = T::one().max(g.norm());
    let mu = g.clone().complex_eigenvalues();
    let lams: Vec<Complex<T>> = mu
        .iter()
        .map(|m| Complex::new(T::zero(), T::one()) * m)
        .collect();
    let htilde: CMatrix<T> = g.map(|x| Complex::new(T::zero(), x));
    let k_metric: CMatrix<T> = symplectic_j::<T>(n).map(|x| Complex::new(T::zero(), x));

    let mut last_fail = String::new();
    let mut rel = tol;
    for _ in 0..LADDER_STEPS {
        let abs_tol = rel * scale;
        match analyze_level(&htilde, &k_metric, &lams, rel, abs_tol, n) {
            Ok(mut dec) => {
                dec.tol_used = abs_tol;
                return Ok(dec);
            }
            Err(fail) => last_fail = fail.msg(),
        }
        rel *= fr(10.0);
    }
    Err(Error::IndeterminateStructure(format!(
        "tolerance ladder exhausted: {last_fail}"
    )))
}

fn analyze_level<T: Real>(
    htilde: &CMatrix<T>,
    k_metric: &CMatrix<T>,
    lams: &[Complex<T>],
    rel: T,
    abs_tol: T,
    n: usize,
) -> LevelResult<SpectralDecomposition<T>> {
    let dim = 2 * n;
    let mut clusters = cluster_eigenvalues(lams, abs_tol);
    symmetrize_pairs(&mut clusters, abs_tol)?;

    // Structures per cluster.
    let mut structures: Vec<ClusterStructure<T>> = Vec::new();
    for c in &clusters {
        structures.push(cluster_chains(htilde, c.lambda, c.indices.len(), rel)?);
    }

    // Order: positive-class blocks, then their negatives, then zero.
    let mut pos_cols: Vec<(Complex<T>, Vec<CVector<T>>)> = Vec::new();
    let mut neg_cols: Vec<(Complex<T>, Vec<CVector<T>>)> = Vec::new();
    let mut zero_structs: Vec<&ClusterStructure<T>> = Vec::new();

    // Deterministic cluster sweep order: by descending |lambda|, then by
    // argument, positives first.
    let mut order: Vec<usize> = (0..structures.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (structures[a].lambda, structures[b].lambda);
        lb.norm()
            .partial_cmp(&la.norm())
            .unwrap()
            .then(la.im.partial_cmp(&lb.im).unwrap())
            .then(la.re.partial_cmp(&lb.re).unwrap())
    });

    let fully_diagonalizable = structures
        .iter()
        .all(|s| s.chains.iter().all(|c| c.len() == 1));

    for &ci in &order {
        let s = &structures[ci];
        if s.lambda.norm() == T::zero() {
            zero_structs.push(s);
            continue;
        }
        if !is_positive_class(s.lambda) {
            continue; // handled with its positive partner
        }
        let partner = structures
            .iter()
            .position(|o| (o.lambda + s.lambda).norm() == T::zero())
            .ok_or_else(|| LevelFail::Inconsistent("missing negative partner".into()))?;
        let sp = &structures[partner];
        if fully_diagonalizable {
            let mut up: Vec<CVector<T>> = s.chains.iter().map(|c| phase_fix(&c[0])).collect();
            let mut um: Vec<CVector<T>> = sp.chains.iter().map(|c| c[0].clone()).collect();
            normalize_pairing(&mut up, &mut um, k_metric)?;
            pos_cols.push((s.lambda, up));
            neg_cols.push((sp.lambda, um));
        } else {
            let up: Vec<CVector<T>> = s.chains.iter().flatten().cloned().collect();
            let um: Vec<CVector<T>> = sp.chains.iter().flatten().cloned().collect();
            pos_cols.push((s.lambda, up));
            neg_cols.push((sp.lambda, um));
        }
    }

    // Assemble columns and block bookkeeping.
    let mut cols: Vec<CVector<T>> = Vec::new();
    let mut eigenfrequencies: Vec<Complex<T>> = Vec::new();
    let mut blocks: Vec<JordanBlock<T>> = Vec::new();

    let mut push_struct = |s: &ClusterStructure<T>,
                           cols: &mut Vec<CVector<T>>,
                           eig: &mut Vec<Complex<T>>,
                           blocks: &mut Vec<JordanBlock<T>>| {
        for chain in &s.chains {
            blocks.push(JordanBlock {
                lambda: s.lambda,
                dim: chain.len(),
                col: cols.len(),
            });
            for v in chain {
                cols.push(v.clone());
                eig.push(s.lambda);
            }
        }
    };

    if fully_diagonalizable {
        for (lam, set) in &pos_cols {
            for v in set {
                blocks.push(JordanBlock {
                    lambda: *lam,
                    dim: 1,
                    col: cols.len(),
                });
                cols.push(v.clone());
                eigenfrequencies.push(*lam);
            }
        }
        // Zero modes: symplectic pairing, plus side first.
        let mut zero_plus: Vec<CVector<T>> = Vec::new();
        let mut zero_minus: Vec<CVector<T>> = Vec::new();
        for zs in &zero_structs {
            let raw: Vec<CVector<T>> = zs.chains.iter().map(|c| c[0].clone()).collect();
            let (p, m) = pair_zero_modes(raw, k_metric)?;
            zero_plus.extend(p);
            zero_minus.extend(m);
        }
        let zero = Complex::new(T::zero(), T::zero());
        for v in &zero_plus {
            blocks.push(JordanBlock { lambda: zero, dim: 1, col: cols.len() });
            cols.push(v.clone());
            eigenfrequencies.push(zero);
        }
        for (lam, set) in &neg_cols {
            for v in set {
                blocks.push(JordanBlock {
                    lambda: *lam,
                    dim: 1,
                    col: cols.len(),
                });
                cols.push(v.clone());
                eigenfrequencies.push(*lam);
            }
        }
        for v in &zero_minus {
            blocks.push(JordanBlock { lambda: zero, dim: 1, col: cols.len() });
            cols.push(v.clone());
            eigenfrequencies.push(zero);
        }
    } else {
        for &ci in &order {
            let s = &structures[ci];
            if s.lambda.norm() != T::zero() && is_positive_class(s.lambda) {
                push_struct(s, &mut cols, &mut eigenfrequencies, &mut blocks);
            }
        }
        for &ci in &order {
            let s = &structures[ci];
            if s.lambda.norm() != T::zero() && !is_positive_class(s.lambda) {
                push_struct(s, &mut cols, &mut eigenfrequencies, &mut blocks);
            }
        }
        for s in &zero_structs {
            push_struct(s, &mut cols, &mut eigenfrequencies, &mut blocks);
        }
    }

    if cols.len() != dim {
        return Err(LevelFail::Inconsistent(format!(
            "assembled {} generalized eigenvectors for dimension {dim}",
            cols.len()
        )));
    }
    let w = CMatrix::<T>::from_columns(&cols);
    let w_inv = w
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| LevelFail::Inconsistent("eigenvector matrix is singular".into()))?;

    let dec = SpectralDecomposition {
        eigenfrequencies,
        blocks,
        w,
        w_inv,
        tol_used: abs_tol,
    };

    // Reconstruction audit.
    let jm = dec.jordan_matrix();
    let resid = (&dec.w * jm * &dec.w_inv - htilde).norm()
        / T::one().max(htilde.norm());
    let budget = rel * fr(RESIDUAL_BUDGET_FACTOR);
    if resid > budget {
        return Err(LevelFail::Inconsistent(format!(
            "reconstruction residual {:.3e} over budget {:.3e}",
            as_f64(resid),
            as_f64(budget)
        )));
    }
    if fully_diagonalizable {
        let j_complex: CMatrix<T> =
            symplectic_j::<T>(n).map(|x| Complex::new(x, T::zero()));
        let pair = &dec.w_inv * k_metric * dec.w_inv.transpose() - j_complex;
        let pn = pair.norm();
        if pn > budget {
            return Err(LevelFail::Inconsistent(format!(
                "boson-like pairing residual {:.3e} over budget {:.3e}",
                as_f64(pn),
                as_f64(budget)
            )));
        }
    }
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::QuadraticForm;
    use nalgebra::DMatrix;

    fn dm(n: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, data)
    }

    fn rotor_form(kx: f64, ky: f64, omega: f64) -> QuadraticForm<f64> {
        let kpx = kx + omega * omega;
        let kpy = ky + omega * omega;
        QuadraticForm::assemble(
            DMatrix::identity(2, 2),
            dm(2, &[kpx, 0.0, 0.0, kpy]),
            dm(2, &[0.0, -omega, omega, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn unit_oscillator_spectrum() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[1.0]), dm(1, &[0.0])).unwrap();
        let dec = spectral(&f.generator(), default_tol()).unwrap();
        assert!(dec.is_diagonalizable());
        let profile = dec.block_profile();
        assert_eq!(profile.len(), 2);
        assert!((profile[0].0 - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!((profile[1].0 - Complex::new(-1.0, 0.0)).norm() < 1e-12);
        // boson-like pairing of the normal operators
        let k = metric(1);
        let pair = &dec.w_inv * &k * dec.w_inv.transpose();
        let j = symplectic_j::<f64>(1).map(|x| Complex::new(x, 0.0));
        assert!((pair - j).norm() < 1e-10);
    }

    fn metric(n: usize) -> DMatrix<Complex<f64>> {
        symplectic_j::<f64>(n).map(|x| Complex::new(0.0, x))
    }

    #[test]
    fn free_particle_is_a_zero_jordan_block() {
        let f = QuadraticForm::assemble(dm(1, &[1.0]), dm(1, &[0.0]), dm(1, &[0.0])).unwrap();
        let dec = spectral(&f.generator(), default_tol()).unwrap();
        let profile = dec.block_profile();
        assert_eq!(profile.len(), 1);
        assert_eq!(profile[0].1, 2);
        assert!(profile[0].0.norm() < 1e-12);
    }

    #[test]
    fn angular_momentum_is_degenerate_diagonalizable() {
        let u = dm(2, &[0.0, 1.0, -1.0, 0.0]);
        let f =
            QuadraticForm::assemble(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), u).unwrap();
        let dec = spectral(&f.generator(), default_tol()).unwrap();
        assert!(dec.is_diagonalizable());
        let mut ones = 0;
        let mut neg = 0;
        for (lam, d) in dec.block_profile() {
            assert_eq!(d, 1);
            if (lam - Complex::new(1.0, 0.0)).norm() < 1e-10 {
                ones += 1;
            }
            if (lam + Complex::new(1.0, 0.0)).norm() < 1e-10 {
                neg += 1;
            }
        }
        assert_eq!((ones, neg), (2, 2));
    }

    #[test]
    fn degenerate_j_curve_has_two_rank2_blocks() {
        // Delta = 0 at omega = omega_c^+ = 1.5 for k = (-1, -4).
        let dec = spectral(&rotor_form(-1.0, -4.0, 1.5).generator(), default_tol()).unwrap();
        let mut profile = dec.block_profile();
        profile.sort_by(|a, b| b.0.re.partial_cmp(&a.0.re).unwrap());
        assert_eq!(profile.len(), 2);
        let s2 = std::f64::consts::SQRT_2;
        assert_eq!(profile[0].1, 2);
        assert_eq!(profile[1].1, 2);
        assert!((profile[0].0 - Complex::new(s2, 0.0)).norm() < 1e-6);
        assert!((profile[1].0 - Complex::new(-s2, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn exceptional_point_is_one_rank4_block() {
        // k_y = 0, k_x = -4 omega^2 at omega = 0.5.
        let dec = spectral(&rotor_form(-1.0, 0.0, 0.5).generator(), default_tol()).unwrap();
        let profile = dec.block_profile();
        assert_eq!(profile.len(), 1);
        assert_eq!(profile[0].1, 4);
        assert!(profile[0].0.norm() < 1e-8);
    }

    #[test]
    fn b_region_four_distinct_real() {
        let dec = spectral(&rotor_form(-1.0, -4.0, 2.0).generator(), default_tol()).unwrap();
        assert!(dec.is_diagonalizable());
        let mut re: Vec<f64> = dec.eigenfrequencies.iter().map(|l| l.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-3.2594, -0.6136, 0.6136, 3.2594];
        for (got, want) in re.iter().zip(expect) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
        for l in &dec.eigenfrequencies {
            assert!(l.im.abs() < 1e-10);
        }
    }

    #[test]
    fn e_region_full_complex() {
        let dec = spectral(&rotor_form(-1.0, -4.0, 1.0).generator(), default_tol()).unwrap();
        assert!(dec.is_diagonalizable());
        for l in &dec.eigenfrequencies {
            assert!(l.re.abs() > 0.1 && l.im.abs() > 0.1);
        }
    }

    #[test]
    fn reconstruction_holds() {
        for (kx, ky, om) in [
            (1.0, 2.0, 0.3),
            (-1.0, -4.0, 2.0),
            (-1.0, -4.0, 1.0),
            (1.0, -1.0, 0.7),
            (-1.0, 0.0, 0.5),
        ] {
            let g = rotor_form(kx, ky, om).generator();
            let dec = spectral(&g, default_tol()).unwrap();
            let htilde = g.map(|x| Complex::new(0.0, x));
            let resid = (&dec.w * dec.jordan_matrix() * &dec.w_inv - htilde).norm();
            assert!(resid < 1e-8, "resid {resid} at ({kx},{ky},{om})");
        }
    }

    #[test]
    fn rejects_non_rpa_generator() {
        let g = dm(2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            spectral(&g, default_tol::<f64>()),
            Err(Error::NotRpaGenerator { .. })
        ));
    }

    #[test]
    fn landau_case_zero_pairing() {
        // k = 0 at omega = 0.5: lambda = {1, 0, 0, -1} diagonalizable.
        let dec = spectral(&rotor_form(0.0, 0.0, 0.5).generator(), default_tol()).unwrap();
        assert!(dec.is_diagonalizable());
        let zeros = dec
            .eigenfrequencies
            .iter()
            .filter(|l| l.norm() < 1e-10)
            .count();
        assert_eq!(zeros, 2);
        let k = metric(2);
        let pair = &dec.w_inv * &k * dec.w_inv.transpose();
        let j = symplectic_j::<f64>(2).map(|x| Complex::new(x, 0.0));
        assert!((pair - j).norm() < 1e-9);
    }
}
