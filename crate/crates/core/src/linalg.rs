//! Dense complex linear algebra: Householder Hessenberg reduction, the
//! shifted QR algorithm for the complex Schur form, Schur reordering, and
//! small LU solves.
//!
//! These routines serve two masters: the projected problems inside the Krylov
//! eigensolver (a few dozen rows) and the brute-force oracle used by tests
//! (a few hundred rows). Nothing here is tuned for large matrices.

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};

pub use crate::sparse::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with real `c`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    /// Returns the rotation mapping `(a, b)` to `(r, 0)`, along with `r`.
    pub(crate) fn zeroing(a: C64, b: C64) -> (Self, C64) {
        let na = a.norm();
        let nb = b.norm();
        if nb == 0.0 {
            return (Givens { c: 1.0, s: ZERO }, a);
        }
        if na == 0.0 {
            return (Givens { c: 0.0, s: ONE }, b);
        }
        let nu = na.hypot(nb);
        let phase = a / na;
        (Givens { c: na / nu, s: phase * b.conj() / nu }, phase * nu)
    }

    /// Rows `i, j` of `m` (restricted to `cols`) become `G * [row_i; row_j]`.
    pub(crate) fn apply_left(&self, m: &mut Array2<C64>, i: usize, j: usize, cols: std::ops::Range<usize>) {
        let nc = m.ncols();
        let data = m.as_slice_mut().expect("standard layout");
        for col in cols {
            let x = data[i * nc + col];
            let y = data[j * nc + col];
            data[i * nc + col] = self.s * y + x * self.c;
            data[j * nc + col] = y * self.c - self.s.conj() * x;
        }
    }

    /// Columns `i, j` of `m` (restricted to `rows`) become `[col_i, col_j] * G^*`.
    pub(crate) fn apply_right(&self, m: &mut Array2<C64>, i: usize, j: usize, rows: std::ops::Range<usize>) {
        let nc = m.ncols();
        let data = m.as_slice_mut().expect("standard layout");
        let sc = self.s.conj();
        for row in rows {
            let base = row * nc;
            let x = data[base + i];
            let y = data[base + j];
            data[base + i] = x * self.c + sc * y;
            data[base + j] = y * self.c - self.s * x;
        }
    }
}

/// Complex Schur decomposition `A = Z T Z^*` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: Array2<C64>,
    pub z: Array2<C64>,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[[i, i]]).collect()
    }

    /// Moves the diagonal entries flagged in `select` to the leading block,
    /// preserving their relative order.
    pub fn reorder(&mut self, select: &[bool]) {
        let n = self.t.nrows();
        let mut dest = 0;
        for src in 0..n {
            if select[src] {
                for k in (dest..src).rev() {
                    swap_adjacent(&mut self.t, &mut self.z, k);
                }
                dest += 1;
            }
        }
    }

    /// Eigenvectors of `A` (unit columns) for the diagonal positions `which`.
    pub fn eigenvectors(&self, which: &[usize]) -> Array2<C64> {
        let n = self.t.nrows();
        let mut out = Array2::zeros((n, which.len()));
        let tnorm = max_modulus(&self.t);
        for (col, &k) in which.iter().enumerate() {
            let x = triangular_eigenvector(&self.t, k, tnorm);
            let mut v: Array1<C64> = self.z.slice(s![.., ..=k]).dot(&x);
            normalize(v.as_slice_mut().unwrap());
            out.column_mut(col).assign(&v);
        }
        out
    }
}

/// Swaps diagonal entries `k` and `k + 1` of the triangular factor.
pub(crate) fn swap_adjacent(t: &mut Array2<C64>, z: &mut Array2<C64>, k: usize) {
    let n = t.nrows();
    let t11 = t[[k, k]];
    let t22 = t[[k + 1, k + 1]];
    if t11 == t22 {
        return;
    }
    let (g, _) = Givens::zeroing(t[[k, k + 1]], t22 - t11);
    g.apply_left(t, k, k + 1, k..n);
    g.apply_right(t, k, k + 1, 0..(k + 2));
    g.apply_right(z, k, k + 1, 0..n);
    t[[k + 1, k]] = ZERO;
    t[[k, k]] = t22;
    t[[k + 1, k + 1]] = t11;
}

/// Solves `(T - t_kk I) x = 0` with `x_k = 1` and `x_j = 0` for `j > k`.
pub(crate) fn triangular_eigenvector(t: &Array2<C64>, k: usize, tnorm: f64) -> Array1<C64> {
    let lambda = t[[k, k]];
    let small = f64::EPSILON * tnorm.max(f64::MIN_POSITIVE);
    let mut x = Array1::<C64>::zeros(k + 1);
    x[k] = ONE;
    for j in (0..k).rev() {
        let mut acc = ZERO;
        for l in (j + 1)..=k {
            acc += t[[j, l]] * x[l];
        }
        let mut d = t[[j, j]] - lambda;
        if d.norm() < small {
            d = C64::new(small, 0.0);
        }
        x[j] = -acc / d;
        let big = x[j].norm();
        if big > 1e100 {
            x.mapv_inplace(|v| v / big);
        }
    }
    x
}

pub(crate) fn max_modulus(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.l1_norm()).fold(0.0f64, f64::max)
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    nrm
}

/// Reduces `a` to upper Hessenberg form in place and returns the unitary `Q`
/// with `A_original = Q H Q^*`.
pub fn hessenberg(a: &mut Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut q = Array2::<C64>::eye(n);
    if n < 3 {
        return q;
    }
    for k in 0..(n - 2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[[i, k]]).collect();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // A <- (I - 2 v v^*) A on rows k+1..n
        for col in k..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[[k + 1 + idx, col]];
            }
            for (idx, vi) in v.iter().enumerate() {
                a[[k + 1 + idx, col]] -= *vi * dot * 2.0;
            }
        }
        // A <- A (I - 2 v v^*) on columns k+1..n
        for row in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += a[[row, k + 1 + idx]] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                a[[row, k + 1 + idx]] -= dot * vi.conj() * 2.0;
            }
        }
        for row in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += q[[row, k + 1 + idx]] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                q[[row, k + 1 + idx]] -= dot * vi.conj() * 2.0;
            }
        }
        a[[k + 1, k]] = alpha;
        for i in (k + 2)..n {
            a[[i, k]] = ZERO;
        }
    }
    q
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Runs the single-shift QR algorithm on an upper Hessenberg `t`, updating
/// `z` with the accumulated rotations.
fn hessenberg_qr(t: &mut Array2<C64>, z: &mut Array2<C64>) -> Result<()> {
    let n = t.nrows();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let anorm = t.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    // Normwise floor so that clusters of roundoff-level eigenvalues deflate.
    let floor = eps * t.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let max_iter = 60 * n.max(10);
    let mut total = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut scale = t[[l - 1, l - 1]].norm() + t[[l, l]].norm();
            if scale == 0.0 {
                scale = anorm;
            }
            if t[[l, l - 1]].norm() <= eps * scale || t[[l, l - 1]].norm() <= floor {
                t[[l, l - 1]] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::QrFailure(n));
        }
        let sigma = if since_deflation % 11 == 0 {
            t[[hi, hi]] + C64::new(0.75 * t[[hi, hi - 1]].norm(), 0.0)
        } else {
            wilkinson_shift(t[[hi - 1, hi - 1]], t[[hi - 1, hi]], t[[hi, hi - 1]], t[[hi, hi]])
        };
        for k in l..hi {
            let g = if k == l {
                Givens::zeroing(t[[l, l]] - sigma, t[[l + 1, l]]).0
            } else {
                let (g, r) = Givens::zeroing(t[[k, k - 1]], t[[k + 1, k - 1]]);
                t[[k, k - 1]] = r;
                t[[k + 1, k - 1]] = ZERO;
                g
            };
            g.apply_left(t, k, k + 1, k..n);
            g.apply_right(t, k, k + 1, 0..(k + 3).min(hi + 1));
            g.apply_right(z, k, k + 1, 0..n);
        }
    }
    for i in 1..n {
        for j in 0..i {
            t[[i, j]] = ZERO;
        }
    }
    Ok(())
}

/// Complex Schur decomposition of a general square matrix.
pub fn schur(a: &Array2<C64>) -> Result<Schur> {
    let mut t = a.as_standard_layout().into_owned();
    let mut z = hessenberg(&mut t);
    hessenberg_qr(&mut t, &mut z)?;
    Ok(Schur { t, z })
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Array2<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[[i, k]].norm().total_cmp(&m[[j, k]].norm())).unwrap();
        if m[[p, k]].norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!("singular {n}x{n} system")));
        }
        if p != k {
            for j in 0..n {
                let tmp = m[[k, j]];
                m[[k, j]] = m[[p, j]];
                m[[p, j]] = tmp;
            }
            x.swap(k, p);
        }
        for i in (k + 1)..n {
            let f = m[[i, k]] / m[[k, k]];
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let mkj = m[[k, j]];
                m[[i, j]] -= f * mkj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in (k + 1)..n {
            acc -= m[[k, j]] * x[j];
        }
        x[k] = acc / m[[k, k]];
    }
    Ok(x)
}

/// All eigenvalues and unit right eigenvectors of a general square matrix,
/// in Schur order.
pub fn eig(a: &Array2<C64>) -> Result<(Vec<C64>, Array2<C64>)> {
    let sch = schur(a)?;
    let n = a.nrows();
    let which: Vec<usize> = (0..n).collect();
    Ok((sch.eigenvalues(), sch.eigenvectors(&which)))
}

pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}
