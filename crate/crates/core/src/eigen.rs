//! Sparse eigensolvers: top-modulus eigenpairs of non-symmetric matrices
//! (left and right), truncated SVD, and extreme eigenpairs of Hermitian
//! matrices, plus a dense oracle used for testing.
//!
//! The workhorse is a restarted Krylov–Schur iteration in complex arithmetic.
//! Each cycle extends an Arnoldi factorization `A V = V H + v b^*` to the full
//! Krylov dimension, reduces the projected matrix to sorted Schur form, and
//! truncates to the leading Schur vectors. This is the same filter as implicit
//! shifted QR restarting with the unwanted Ritz values as shifts, but the
//! truncation needs no bulge chasing.

use ndarray::{s, Array2};
use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, normalize, swap_adjacent, triangular_eigenvector, Schur};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sparse::{Scalar, SparseMatrix, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest problem the dense oracle accepts.
pub const DENSE_ORACLE_MAX_N: usize = 2000;

/// Relative distance under which two eigenvalues are considered the same
/// when pairing left and right eigenvectors.
pub const MATCH_TOLERANCE: f64 = 1e-6;

/// Restarts with converged Ritz estimates but failing explicit residuals
/// before the looser acceptance applies.
const STALL_RESTARTS: usize = 3;
/// Extra wanted values tried when the iteration does not converge.
const WIDEN_ON_STALL: usize = 2;

/// A linear map on `C^n` given by its action.
pub trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl<T: Scalar> Operator for SparseMatrix<T> {
    fn dim(&self) -> usize {
        self.n_rows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.mul_vec_c64(x, y);
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Relative residual tolerance: `|A u - lambda u| <= tol * |lambda_1|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Krylov subspace dimension; `None` means `max(3k + 20, 60)`.
    pub krylov_dim: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_restarts: 300, seed: 0, krylov_dim: None }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Eigenpairs sorted by decreasing modulus.
///
/// Columns of `right` satisfy `A u = lambda u`, columns of `left` satisfy
/// `A^T v = lambda v`. All columns have unit norm and their largest-modulus
/// entry is real and positive.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<C64>,
    pub right: Array2<C64>,
    pub left: Array2<C64>,
    pub residuals: Vec<f64>,
    pub left_residuals: Vec<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SvdTriplets {
    pub singular_values: Vec<f64>,
    /// `n_rows x k`, unit columns.
    pub left: Array2<f64>,
    /// `n_cols x k`, unit columns.
    pub right: Array2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

/// Ritz pairs straight out of the Krylov iteration.
struct Ritz {
    values: Vec<C64>,
    vectors: Vec<Vec<C64>>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn random_vector(n: usize, rng: &mut Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect()
}

/// Two passes of modified Gram–Schmidt against `basis`; returns the
/// accumulated projection coefficients.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut coeffs = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
            let d = dot(q, w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= d * qi;
            }
            *c += d;
        }
    }
    coeffs
}

/// A unit vector orthogonal to `basis`, or the zero vector when the basis
/// already spans the space.
fn random_orthogonal(basis: &[Vec<C64>], n: usize, rng: &mut Rng) -> Vec<C64> {
    for _ in 0..5 {
        let mut w = random_vector(n, rng);
        let before = norm(&w);
        orthogonalize(basis, &mut w);
        let after = normalize(&mut w);
        if after > 1e-8 * before {
            return w;
        }
    }
    vec![ZERO; n]
}

fn precedes(a: C64, b: C64) -> bool {
    let (ma, mb) = (a.norm(), b.norm());
    ma > mb || (ma == mb && a.im > b.im)
}

/// Bubble-sorts the Schur form so diagonal moduli decrease.
fn sort_schur(sch: &mut Schur) {
    let m = sch.t.nrows();
    for _ in 0..m {
        let mut swapped = false;
        for i in 0..m.saturating_sub(1) {
            if precedes(sch.t[[i + 1, i + 1]], sch.t[[i, i]]) {
                swap_adjacent(&mut sch.t, &mut sch.z, i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

fn residual(op: &dyn Operator, lambda: C64, u: &[C64]) -> f64 {
    let mut au = vec![ZERO; u.len()];
    op.apply(u, &mut au);
    au.iter().zip(u).map(|(a, x)| (a - lambda * x).norm_sqr()).sum::<f64>().sqrt()
}

/// Krylov–Schur iteration for the `want` eigenvalues of largest modulus.
fn krylov_schur(op: &dyn Operator, want: usize, cfg: &SolverConfig) -> Result<Ritz> {
    let n = op.dim();
    if want == 0 {
        return Ok(Ritz { values: Vec::new(), vectors: Vec::new() });
    }
    let m = cfg.krylov_dim.unwrap_or((3 * want + 20).max(60)).max(want + 1).min(n);
    let mut rng = rng_from_seed(cfg.seed);
    let mut start = random_vector(n, &mut rng);
    normalize(&mut start);
    let mut basis: Vec<Vec<C64>> = vec![start];
    let mut h = Array2::<C64>::zeros((m + 1, m));
    let mut p = 0;
    let mut latest = vec![f64::INFINITY; want];
    let mut stalled = 0;

    for restart in 0..=cfg.max_restarts {
        for j in p..m {
            let mut w = vec![ZERO; n];
            op.apply(&basis[j], &mut w);
            let coeffs = orthogonalize(&basis[..=j], &mut w);
            for (i, c) in coeffs.iter().enumerate() {
                h[[i, j]] = *c;
            }
            let beta = norm(&w);
            let scale = norm(&coeffs) + beta;
            if beta > 1e-13 * scale && beta > 0.0 {
                h[[j + 1, j]] = C64::new(beta, 0.0);
                for x in w.iter_mut() {
                    *x /= beta;
                }
                basis.push(w);
            } else {
                h[[j + 1, j]] = ZERO;
                let next = random_orthogonal(&basis, n, &mut rng);
                basis.push(next);
            }
        }

        let mut sch = linalg::schur(&h.slice(s![..m, ..m]).to_owned())?;
        sort_schur(&mut sch);
        let b: Vec<C64> = (0..m).map(|c| (0..m).map(|l| h[[m, l]] * sch.z[[l, c]]).sum()).collect();
        let theta1 = sch.t[[0, 0]].norm();
        let threshold = cfg.tol * theta1;

        let tnorm = linalg::max_modulus(&sch.t);
        let mut estimates = Vec::with_capacity(want);
        let mut small_vecs = Vec::with_capacity(want);
        for i in 0..want {
            let x = triangular_eigenvector(&sch.t, i, tnorm);
            let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let est = (0..=i).map(|l| b[l] * x[l]).sum::<C64>().norm() / xn;
            estimates.push(est);
            small_vecs.push(x);
        }
        latest.clone_from(&estimates);
        let nconv = estimates.iter().filter(|e| **e <= threshold).count();

        if nconv == want {
            let mut values = Vec::with_capacity(want);
            let mut vectors = Vec::with_capacity(want);
            let mut ok = true;
            latest.clear();
            for (i, x) in small_vecs.iter().enumerate() {
                let y = sch.z.slice(s![.., ..=i]).dot(x);
                let mut u = vec![ZERO; n];
                for (l, yl) in y.iter().enumerate() {
                    for (ui, vi) in u.iter_mut().zip(&basis[l]) {
                        *ui += yl * vi;
                    }
                }
                normalize(&mut u);
                let lambda = sch.t[[i, i]];
                let res = residual(op, lambda, &u);
                latest.push(res);
                if res > threshold {
                    ok = false;
                }
                values.push(lambda);
                vectors.push(u);
            }
            // Near-defective eigenvalues have eigenvectors whose residual is
            // bounded below by roundoff over the gap; once the Schur subspace
            // has converged for a few restarts, accept up to sqrt(tol).
            stalled += usize::from(!ok);
            let loose = cfg.tol.sqrt() * theta1;
            if ok || (stalled >= STALL_RESTARTS && latest.iter().all(|r| *r <= loose)) {
                return Ok(Ritz { values, vectors });
            }
        }
        if restart == cfg.max_restarts {
            break;
        }

        let keep = (want + nconv.min((m - want) / 2)).clamp(want, m - 1);
        let mut next_basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        for c in 0..keep {
            let mut v = vec![ZERO; n];
            for (l, q) in basis.iter().take(m).enumerate() {
                let zl = sch.z[[l, c]];
                if zl != ZERO {
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi += zl * qi;
                    }
                }
            }
            next_basis.push(v);
        }
        next_basis.push(basis.swap_remove(m));
        basis = next_basis;
        h.fill(ZERO);
        for i in 0..keep {
            for j in i..keep {
                h[[i, j]] = sch.t[[i, j]];
            }
            h[[keep, i]] = b[i];
        }
        p = keep;
    }
    Err(Error::NoConvergence { restarts: cfg.max_restarts, residuals: latest })
}

/// Rotates `v` so its largest-modulus entry is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let top = v.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
    if top == 0.0 {
        return;
    }
    let idx = v.iter().position(|x| x.norm() >= top * (1.0 - 1e-10)).unwrap();
    let rot = v[idx].conj() / v[idx].norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[idx] = C64::new(v[idx].norm(), 0.0);
}

/// Makes the value set of a real matrix closed under conjugation: values
/// within the snapping band of the real axis become exactly real with real
/// vectors, every complex value gets its partner as the exact conjugate, and
/// the result holds at least `k` values, plus one more if the `k`-th value
/// would otherwise lose its partner.
fn conjugate_closure(raw: Ritz, k: usize, snap: f64) -> Ritz {
    let lam1 = raw.values.first().map(|v| v.norm()).unwrap_or(0.0);
    let band = snap * lam1;
    let mut used = vec![false; raw.values.len()];
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for i in 0..raw.values.len() {
        if values.len() >= k {
            break;
        }
        if used[i] {
            continue;
        }
        used[i] = true;
        let lambda = raw.values[i];
        let mut v = raw.vectors[i].clone();
        fix_phase(&mut v);
        if lambda.im.abs() <= band {
            for x in v.iter_mut() {
                *x = C64::new(x.re, 0.0);
            }
            normalize(&mut v);
            values.push(C64::new(lambda.re, 0.0));
            vectors.push(v);
            continue;
        }
        let (rep, rep_vec) = if lambda.im > 0.0 {
            (lambda, v)
        } else {
            (lambda.conj(), v.iter().map(|x| x.conj()).collect())
        };
        let target = lambda.conj();
        let partner = (0..raw.values.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (raw.values[a] - target).norm().total_cmp(&(raw.values[b] - target).norm()));
        if let Some(j) = partner {
            if (raw.values[j] - target).norm() <= MATCH_TOLERANCE * lam1.max(f64::MIN_POSITIVE) {
                used[j] = true;
            }
        }
        let conj_vec: Vec<C64> = rep_vec.iter().map(|x| x.conj()).collect();
        values.push(rep);
        vectors.push(rep_vec);
        values.push(rep.conj());
        vectors.push(conj_vec);
    }
    Ritz { values, vectors }
}

/// Sorts by decreasing modulus (positive imaginary part first on ties) and
/// fixes the phase of every vector.
fn sort_and_fix(raw: Ritz) -> Ritz {
    let mut order: Vec<usize> = (0..raw.values.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (raw.values[a], raw.values[b]);
        vb.norm().total_cmp(&va.norm()).then(vb.im.total_cmp(&va.im))
    });
    let values = order.iter().map(|&i| raw.values[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = raw.vectors[i].clone();
            fix_phase(&mut v);
            v
        })
        .collect();
    Ritz { values, vectors }
}

fn columns(n: usize, vecs: &[Vec<C64>]) -> Array2<C64> {
    let mut out = Array2::zeros((n, vecs.len()));
    for (c, v) in vecs.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            out[[r, c]] = *x;
        }
    }
    out
}

fn check_square(a: &SparseMatrix, k: usize) -> Result<()> {
    if !a.is_square() {
        return invalid(format!("matrix is {}x{}, expected square", a.n_rows(), a.n_cols()));
    }
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if k >= a.n_rows() {
        return invalid(format!("k = {k} must be smaller than n = {}", a.n_rows()));
    }
    Ok(())
}

fn right_pairs(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<Ritz> {
    // When the k-th and (k+1)-th moduli are nearly tied the wanted/unwanted
    // boundary cuts a cluster and Ritz values keep trading places across
    // it; moving the boundary by one or two values fixes that.
    let widest = (k + WIDEN_ON_STALL).min(a.n_rows() - 1);
    let mut want = k;
    let raw = loop {
        match krylov_schur(a, want, cfg) {
            Err(Error::NoConvergence { .. }) if want < widest => want += 1,
            other => break other?,
        }
    };
    let snap = (0.1 * cfg.tol).max(1e-13);
    Ok(sort_and_fix(conjugate_closure(raw, k, snap)))
}

/// The `k` eigenvalues of largest modulus (more if needed to keep conjugate
/// pairs together), without eigenvectors on the left.
pub fn top_eigenvalues(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<Vec<C64>> {
    check_square(a, k)?;
    Ok(right_pairs(a, k, cfg)?.values)
}

/// Greedy nearest-neighbour pairing of `right` values with `left` values.
fn match_values(right: &[C64], left: &[C64], strict: bool) -> Result<Vec<usize>> {
    let lam1 = right.first().map(|v| v.norm()).unwrap_or(0.0);
    let tol = MATCH_TOLERANCE * lam1;
    if strict {
        for i in 0..right.len() {
            for j in (i + 1)..right.len() {
                // Exact conjugates pair up unambiguously since both sides are
                // conjugate-closed.
                if (right[i] - right[j]).norm() < tol && right[j] != right[i].conj() {
                    return Err(Error::Matching(format!(
                        "eigenvalues {} and {} are closer than {tol:e}",
                        right[i], right[j]
                    )));
                }
            }
        }
    }
    let mut used = vec![false; left.len()];
    let mut out: Vec<usize> = Vec::with_capacity(right.len());
    for (i, r) in right.iter().enumerate() {
        // The conjugate of a matched value takes the conjugate left partner;
        // a real left value is its own conjugate.
        if r.im != 0.0 {
            if let Some(p) = (0..i).find(|&p| right[p] == r.conj()) {
                let lp = left[out[p]];
                let twin = if lp.im == 0.0 {
                    Some(out[p])
                } else {
                    (0..left.len()).find(|&j| !used[j] && left[j] == lp.conj())
                };
                if let Some(j) = twin {
                    used[j] = true;
                    out.push(j);
                    continue;
                }
            }
        }
        let best = (0..left.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (left[a] - r).norm().total_cmp(&(left[b] - r).norm()))
            .ok_or_else(|| Error::Matching(format!("no left eigenvalue left for {r}")))?;
        if strict && (left[best] - r).norm() > tol {
            return Err(Error::Matching(format!(
                "right eigenvalue {r} has no left partner (nearest {})",
                left[best]
            )));
        }
        used[best] = true;
        out.push(best);
    }
    Ok(out)
}

/// The `k` eigenpairs of largest modulus of a square sparse real matrix, with
/// left eigenvectors from a separate solve on the transpose.
///
/// If the `k`-th eigenvalue is complex its conjugate is included as well, so
/// the result may hold `k + 1` pairs.
pub fn top_eigenpairs(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<EigenPairs> {
    check_square(a, k)?;
    let n = a.n_rows();
    let right = right_pairs(a, k, cfg)?;
    let kk = right.values.len();
    let at = a.transpose();
    let left_cfg = SolverConfig { seed: derive_seed(cfg.seed, &[1]), ..cfg.clone() };
    // Eigenvalues at the edge of a dense bulk have near-tied moduli, so the
    // transpose solve may rank them differently; widen its window on failure.
    let mut left_k = kk.min(n - 1);
    let (left, idx) = loop {
        let left = right_pairs(&at, left_k, &left_cfg)?;
        match match_values(&right.values, &left.values, true) {
            Ok(idx) => break (left, idx),
            Err(Error::Matching(_)) if left_k < (kk + 6).min(n - 1) => {
                left_k = (left_k + 2).min(n - 1);
            }
            // Inside a defective cluster eigenvalues are only accurate to
            // eps^(1/size); pair by nearest value and let `left_residuals`
            // show the quality.
            Err(Error::Matching(_)) => {
                let idx = match_values(&right.values, &left.values, false)?;
                break (left, idx);
            }
            Err(e) => return Err(e),
        }
    };
    let left_vecs: Vec<Vec<C64>> = idx.iter().map(|&j| left.vectors[j].clone()).collect();
    let residuals = right.values.iter().zip(&right.vectors).map(|(l, u)| residual(a, *l, u)).collect();
    let left_residuals = right.values.iter().zip(&left_vecs).map(|(l, v)| residual(&at, *l, v)).collect();
    Ok(EigenPairs {
        values: right.values.clone(),
        right: columns(n, &right.vectors),
        left: columns(n, &left_vecs),
        residuals,
        left_residuals,
    })
}

/// All eigenvalues of a dense real matrix sorted by decreasing modulus.
pub fn dense_eigenvalues(a: &Array2<f64>) -> Result<Vec<C64>> {
    let mut values = linalg::schur(&linalg::to_complex(a))?.eigenvalues();
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    Ok(values)
}

/// Within adjacent near-conjugate pairs, puts the positive imaginary part
/// first even if rounding made its modulus marginally smaller.
fn pair_order(mut r: Ritz) -> Ritz {
    let lam1 = r.values.first().map(|v| v.norm()).unwrap_or(0.0);
    let mut i = 0;
    while i + 1 < r.values.len() {
        let (a, b) = (r.values[i], r.values[i + 1]);
        if a.im < 0.0 && (a - b.conj()).norm() <= 1e-10 * lam1 {
            r.values.swap(i, i + 1);
            r.vectors.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    r
}

fn dense_ritz(a: &Array2<C64>) -> Result<Ritz> {
    let (values, vecs) = linalg::eig(a)?;
    let vectors = (0..values.len()).map(|c| vecs.column(c).to_vec()).collect();
    Ok(Ritz { values, vectors })
}

/// Full eigendecomposition of a dense real matrix by Hessenberg reduction and
/// shifted QR, with the same ordering and phase conventions as
/// [`top_eigenpairs`]. Left and right values are paired greedily without the
/// separation check, so defective clusters still produce output.
pub fn dense_eigen_oracle(a: &Array2<f64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return invalid("dense oracle needs a square matrix");
    }
    if n > DENSE_ORACLE_MAX_N {
        return invalid(format!("dense oracle limited to n <= {DENSE_ORACLE_MAX_N}, got {n}"));
    }
    let ac = linalg::to_complex(a);
    let snap_real = |r: Ritz| {
        let lam1 = r.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let values = r
            .values
            .iter()
            .map(|v| if v.im.abs() <= 1e-13 * lam1 { C64::new(v.re, 0.0) } else { *v })
            .collect();
        Ritz { values, vectors: r.vectors }
    };
    let right = pair_order(sort_and_fix(snap_real(dense_ritz(&ac)?)));
    let left = pair_order(sort_and_fix(snap_real(dense_ritz(&ac.t().to_owned())?)));
    let idx = match_values(&right.values, &left.values, false)?;
    let left_vecs: Vec<Vec<C64>> = idx.iter().map(|&j| left.vectors[j].clone()).collect();
    let dense_residual = |m: &Array2<C64>, l: C64, v: &[C64]| {
        let av = m.dot(&ndarray::ArrayView1::from(v));
        av.iter().zip(v).map(|(x, y)| (x - l * y).norm_sqr()).sum::<f64>().sqrt()
    };
    let at = ac.t().to_owned();
    let residuals = right.values.iter().zip(&right.vectors).map(|(l, u)| dense_residual(&ac, *l, u)).collect();
    let left_residuals = right.values.iter().zip(&left_vecs).map(|(l, v)| dense_residual(&at, *l, v)).collect();
    Ok(EigenPairs {
        values: right.values.clone(),
        right: columns(n, &right.vectors),
        left: columns(n, &left_vecs),
        residuals,
        left_residuals,
    })
}

/// `x -> A^T (A x)` without forming the product.
struct Gram<'a> {
    a: &'a SparseMatrix,
    at: SparseMatrix,
}

impl Operator for Gram<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut tmp = vec![ZERO; self.a.n_rows()];
        self.a.mul_vec_c64(x, &mut tmp);
        self.at.mul_vec_c64(&tmp, y);
    }
}

fn real_orthonormalize(cols: &mut [Vec<f64>], rng: &mut Rng) {
    for i in 0..cols.len() {
        for attempt in 0..6 {
            for _ in 0..2 {
                for j in 0..i {
                    let d: f64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a * b).sum();
                    let (head, tail) = cols.split_at_mut(i);
                    for (x, q) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= d * q;
                    }
                }
            }
            let nrm = cols[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 1e-10 || attempt == 5 {
                if nrm > 0.0 {
                    cols[i].iter_mut().for_each(|x| *x /= nrm);
                }
                break;
            }
            cols[i] = (0..cols[i].len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        }
    }
}

/// The `k` largest singular triplets, from the eigenpairs of `A^T A`.
pub fn top_svd(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<SvdTriplets> {
    let (nr, nc) = (a.n_rows(), a.n_cols());
    if k == 0 || k > nr.min(nc) {
        return invalid(format!("k = {k} must be in 1..={}", nr.min(nc)));
    }
    let gram = Gram { a, at: a.transpose() };
    let raw = sort_and_fix(krylov_schur(&gram, k, cfg)?);
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[2]));
    let mut right: Vec<Vec<f64>> = raw.vectors.iter().take(k).map(|v| v.iter().map(|x| x.re).collect()).collect();
    real_orthonormalize(&mut right, &mut rng);
    let mut sigma = Vec::with_capacity(k);
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(k);
    for v in &right {
        let u = a.mul_vec(v);
        let s = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        sigma.push(s);
        left.push(u);
    }
    let s1 = sigma.first().copied().unwrap_or(0.0);
    for (u, s) in left.iter_mut().zip(&sigma) {
        if *s > 1e-14 * s1 && *s > 0.0 {
            u.iter_mut().for_each(|x| *x /= s);
        } else {
            u.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    real_orthonormalize(&mut left, &mut rng);
    let to_array = |cols: &[Vec<f64>], rows: usize| {
        Array2::from_shape_fn((rows, cols.len()), |(r, c)| cols[c][r])
    };
    Ok(SvdTriplets { singular_values: sigma, left: to_array(&left, nr), right: to_array(&right, nc) })
}

/// `x -> sign * H x + shift * x`.
struct Shifted<'a> {
    h: &'a SparseMatrix<C64>,
    sign: f64,
    shift: f64,
}

impl Operator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.h.n_rows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.h.mul_vec_c64(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = *yi * self.sign + xi * self.shift;
        }
    }
}

/// Extreme eigenpairs of a complex Hermitian matrix.
///
/// Both ends are reached through a spectral shift by the Gershgorin bound
/// `c`: the largest eigenvalues of `H + cI` or of `cI - H`. Values are real
/// and sorted from the requested end inward; `left` equals `right`.
/// Residuals are judged against the norm of the shifted operator.
pub fn hermitian_extreme(h: &SparseMatrix<C64>, which: Which, k: usize, cfg: &SolverConfig) -> Result<EigenPairs> {
    let n = h.n_rows();
    if !h.is_square() {
        return invalid("Hermitian matrix must be square");
    }
    if k == 0 || k >= n {
        return invalid(format!("k = {k} must be in 1..{n}"));
    }
    let defect = h.hermitian_defect();
    if defect > 1e-12 {
        return invalid(format!("matrix is not Hermitian (defect {defect:e})"));
    }
    let c = h.abs_row_sums().into_iter().fold(0.0, f64::max);
    let sign = if which == Which::Largest { 1.0 } else { -1.0 };
    let op = Shifted { h, sign, shift: c };
    let raw = krylov_schur(&op, k, cfg)?;
    let mut pairs: Vec<(f64, Vec<C64>)> = raw
        .values
        .iter()
        .zip(raw.vectors)
        .map(|(theta, mut v)| {
            fix_phase(&mut v);
            (sign * (theta.re - c), v)
        })
        .collect();
    match which {
        Which::Largest => pairs.sort_by(|a, b| b.0.total_cmp(&a.0)),
        Which::Smallest => pairs.sort_by(|a, b| a.0.total_cmp(&b.0)),
    }
    let values: Vec<C64> = pairs.iter().map(|p| C64::new(p.0, 0.0)).collect();
    let vecs: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    let residuals: Vec<f64> = values.iter().zip(&vecs).map(|(l, v)| residual(h, *l, v)).collect();
    let right = columns(n, &vecs);
    Ok(EigenPairs { values, left: right.clone(), right, left_residuals: residuals.clone(), residuals })
}

/// Dense Hermitian eigendecomposition (ascending values), for tests.
pub fn dense_hermitian_oracle(h: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (values, vecs) = linalg::eig(h)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let sorted = order.iter().map(|&i| values[i].re).collect();
    let mut out = Array2::zeros(vecs.raw_dim());
    for (c, &i) in order.iter().enumerate() {
        let mut v = vecs.column(i).to_vec();
        fix_phase(&mut v);
        for (r, x) in v.into_iter().enumerate() {
            out[[r, c]] = x;
        }
    }
    Ok((sorted, out))
}
