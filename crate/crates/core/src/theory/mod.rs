//! Analytic predictions for the spectrum of a random digraph drawn from a
//! [`ModelSpec`]: the eigenvalues and unit eigenvectors of `Q = E[A]`, the
//! detection threshold, the number `r0` of outliers, the `Gamma` series and
//! the limiting eigenvector overlaps.
//!
//! For block models everything reduces to `r x r` algebra on the modularity
//! matrix `M = F Pi`; dense models fall back on the dense eigensolver and a
//! truncated Neumann series, which doubles as the oracle for the block path.

mod moments;
mod pathwise;

pub use moments::{limit_moments, LimitMoments};
pub use pathwise::{
    calibrate_s, eta_threshold, pathwise_detection_threshold, pathwise_mean_degree, theta, tridiag_toeplitz_eigen,
    two_block_report, ThresholdCheck, ToeplitzEigen, TwoBlockReport,
};

use ndarray::Array2;

use crate::eigen::{dense_eigen_oracle, dense_eigenvalues, fix_phase, DENSE_ORACLE_MAX_N};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, lu_solve};
use crate::model::{sbm_summary, ModelSpec, SbmModel, SbmSummary};
use crate::sparse::C64;

/// Eigenvalues below this fraction of `|mu_1|` count as zero.
const ZERO_EIGENVALUE: f64 = 1e-9;
/// Minimum relative separation between nonzero eigenvalues.
const SEPARATION: f64 = 1e-8;

/// Eigenvectors of the `r x r` modularity problem for block models.
#[derive(Clone, Debug)]
pub struct BlockVectors {
    /// Right eigenvectors of `F Pi` as columns, scaled so `<p, |f_i|^2> = 1`.
    pub f: Array2<C64>,
    /// Right eigenvectors of `(Pi F)^T` as columns, scaled so `<q, |g_i|^2> = 1`.
    pub g: Array2<C64>,
    pub summary: SbmSummary,
}

#[derive(Clone, Debug)]
pub struct ExpectedSpectrum {
    /// Nonzero eigenvalues of `Q` (all `r` for block models), by decreasing modulus.
    pub mu: Vec<C64>,
    /// Unit right eigenvectors of `Q`, `n x r`.
    pub phi: Array2<C64>,
    /// Unit left eigenvectors of `Q`, `n x r`.
    pub xi: Array2<C64>,
    /// Spectral radius of `K`.
    pub rho: f64,
    /// `max(sqrt(rho), max |W|)`.
    pub theta_threshold: f64,
    pub r0: usize,
    /// `sqrt(theta_threshold / |mu_r0|)` when `r0 >= 1`.
    pub tau: Option<f64>,
    pub block: Option<BlockVectors>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Argument of [`gamma_functional`]: either a full node vector, or a block
/// vector `h` standing for `Sigma h` (lifted by the left memberships for the
/// right side and by the right memberships for the left side).
#[derive(Clone, Debug)]
pub enum GammaVector {
    Node(Vec<C64>),
    Block(Vec<C64>),
}

/// Predicted limiting overlaps and eigendefects for the `r0` outliers.
#[derive(Clone, Debug)]
pub struct OverlapPrediction {
    /// `a[i, j]`, predicted `|<u_i, phi_j>|`.
    pub a: Array2<f64>,
    /// `b[i, j]`, predicted `|<v_i, xi_j>|`.
    pub b: Array2<f64>,
    pub right_defects: Vec<f64>,
    pub left_defects: Vec<f64>,
    /// True when `r0 = 0` and there is nothing to predict.
    pub empty: bool,
}

fn sort_desc(values: &mut [(C64, usize)]) {
    values.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()).then(b.0.im.total_cmp(&a.0.im)));
}

fn check_separation(mu: &[C64]) -> Result<()> {
    let lam1 = mu.first().map(|v| v.norm()).unwrap_or(0.0);
    let nonzero: Vec<C64> = mu.iter().copied().filter(|v| v.norm() > ZERO_EIGENVALUE * lam1).collect();
    for i in 0..nonzero.len() {
        for j in (i + 1)..nonzero.len() {
            if (nonzero[i] - nonzero[j]).norm() < SEPARATION * lam1 {
                return Err(Error::Degenerate(format!(
                    "eigenvalues {} and {} of the expected matrix are not separated",
                    nonzero[i], nonzero[j]
                )));
            }
        }
    }
    Ok(())
}

fn snap_real(v: C64, scale: f64) -> C64 {
    if v.im.abs() <= 1e-12 * scale {
        C64::new(v.re, 0.0)
    } else {
        v
    }
}

fn weighted_norm2(weights: &[f64], v: ndarray::ArrayView1<C64>) -> f64 {
    weights.iter().zip(v).map(|(w, x)| w * x.norm_sqr()).sum()
}

fn finish(mu: Vec<C64>, phi: Array2<C64>, xi: Array2<C64>, rho: f64, wmax: f64, block: Option<BlockVectors>) -> ExpectedSpectrum {
    let theta_threshold = rho.sqrt().max(wmax);
    let r0 = mu.iter().filter(|m| m.norm() > theta_threshold).count();
    let tau = (r0 >= 1).then(|| (theta_threshold / mu[r0 - 1].norm()).sqrt());
    ExpectedSpectrum { mu, phi, xi, rho, theta_threshold, r0, tau, block }
}

fn block_spectrum(m: &SbmModel) -> Result<ExpectedSpectrum> {
    let summary = sbm_summary(m);
    let r = m.r();
    let n = m.n();
    let modm = linalg::to_complex(&summary.modularity);
    let pif = summary.pi.dot(m.f());
    let (vals, vecs) = linalg::eig(&modm)?;
    let (lvals, lvecs) = linalg::eig(&linalg::to_complex(&pif.t().to_owned()))?;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut order: Vec<(C64, usize)> = vals.iter().map(|v| snap_real(*v, scale)).zip(0..r).collect();
    sort_desc(&mut order);
    let mu: Vec<C64> = order.iter().map(|(v, _)| *v).collect();
    check_separation(&mu)?;

    let mut used = vec![false; r];
    let mut f = Array2::<C64>::zeros((r, r));
    let mut g = Array2::<C64>::zeros((r, r));
    for (col, (value, src)) in order.iter().enumerate() {
        let mut fv = vecs.column(*src).to_vec();
        let j = (0..r)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (lvals[a] - value).norm().total_cmp(&(lvals[b] - value).norm()))
            .unwrap();
        used[j] = true;
        let mut gv = lvecs.column(j).to_vec();
        for (v, w) in [(&mut fv, &summary.p), (&mut gv, &summary.q)] {
            fix_phase(v);
            if value.im == 0.0 {
                v.iter_mut().for_each(|x| *x = C64::new(x.re, 0.0));
            }
            let nrm = weighted_norm2(w, ndarray::ArrayView1::from(&v[..])).sqrt();
            if nrm > 0.0 {
                v.iter_mut().for_each(|x| *x /= nrm);
            }
        }
        for k in 0..r {
            f[[k, col]] = fv[k];
            g[[k, col]] = gv[k];
        }
    }
    let root_n = (n as f64).sqrt();
    let phi = Array2::from_shape_fn((n, r), |(x, i)| f[[m.sigma_left()[x], i]] / root_n);
    let xi = Array2::from_shape_fn((n, r), |(x, i)| g[[m.sigma_right()[x], i]] / root_n);
    let rho = mu.first().map(|v| v.norm()).unwrap_or(0.0);
    let wmax = if m.f().iter().any(|x| *x > 0.0) { 1.0 } else { 0.0 };
    Ok(finish(mu, phi, xi, rho, wmax, Some(BlockVectors { f, g, summary })))
}

fn dense_spectrum(spec: &ModelSpec) -> Result<ExpectedSpectrum> {
    let n = spec.n();
    if n > DENSE_ORACLE_MAX_N {
        return invalid(format!("dense models are limited to n <= {DENSE_ORACLE_MAX_N}"));
    }
    let q = spec.q_dense();
    let pairs = dense_eigen_oracle(&q)?;
    let lam1 = pairs.values.first().map(|v| v.norm()).unwrap_or(0.0);
    let keep: Vec<usize> = (0..pairs.len()).filter(|&i| pairs.values[i].norm() > ZERO_EIGENVALUE * lam1).collect();
    let mu: Vec<C64> = keep.iter().map(|&i| pairs.values[i]).collect();
    check_separation(&mu)?;
    let pick = |m: &Array2<C64>| Array2::from_shape_fn((n, keep.len()), |(x, c)| m[[x, keep[c]]]);
    let rho = dense_eigenvalues(&spec.k_dense())?.first().map(|v| v.norm()).unwrap_or(0.0);
    Ok(finish(mu, pick(&pairs.right), pick(&pairs.left), rho, spec.max_weight(), None))
}

/// Eigenvalues and eigenvectors of `Q`, the threshold and `r0`.
pub fn expected_spectrum(spec: &ModelSpec) -> Result<ExpectedSpectrum> {
    match spec {
        ModelSpec::Sbm(m) => block_spectrum(m),
        ModelSpec::Dense(_) => dense_spectrum(spec),
    }
}

fn inner(w: &[f64], x: &[C64]) -> C64 {
    w.iter().zip(x).map(|(a, b)| b * *a).sum()
}

/// `n <w, (I - z^{-1} B)^{-1} h>` for a block matrix `B`.
fn block_resolvent(b: &Array2<f64>, weights: &[f64], n: usize, z: C64, h: &[C64]) -> Result<C64> {
    let r = b.nrows();
    let sys = Array2::from_shape_fn((r, r), |(i, j)| {
        let id = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        id - C64::new(b[[i, j]], 0.0) / z
    });
    let x = lu_solve(&sys, h)?;
    Ok(inner(weights, &x) * n as f64)
}

/// `Gamma(z, xi) = sum_t <1, K^t xi> / z^t` (right side) or the same with
/// `K^T` (left side). Requires `|z| > rho`.
pub fn gamma_functional(spec: &ModelSpec, z: C64, xi: &GammaVector, side: Side) -> Result<C64> {
    let rho = match spec {
        ModelSpec::Sbm(m) => {
            let s = sbm_summary(m);
            dense_eigenvalues(&s.modularity)?.first().map(|v| v.norm()).unwrap_or(0.0)
        }
        ModelSpec::Dense(_) => dense_eigenvalues(&spec.k_dense())?.first().map(|v| v.norm()).unwrap_or(0.0),
    };
    if z.norm() <= rho {
        return Err(Error::Divergent { z_abs: z.norm(), rho });
    }
    match (spec, xi) {
        (ModelSpec::Sbm(m), GammaVector::Block(h)) => {
            if h.len() != m.r() {
                return invalid(format!("block vector has length {}, expected {}", h.len(), m.r()));
            }
            sbm_gamma_block(m, z, h, side)
        }
        (ModelSpec::Sbm(m), GammaVector::Node(v)) => {
            if v.len() != m.n() {
                return invalid(format!("node vector has length {}, expected {}", v.len(), m.n()));
            }
            let total: C64 = v.iter().sum();
            let n = m.n() as f64;
            let r = m.r();
            let (agg_by, f) = match side {
                Side::Right => (m.sigma_right(), m.f().to_owned()),
                Side::Left => (m.sigma_left(), m.f().t().to_owned()),
            };
            let mut agg = vec![C64::new(0.0, 0.0); r];
            for (x, &c) in agg_by.iter().enumerate() {
                agg[c] += v[x];
            }
            let h: Vec<C64> = (0..r).map(|i| (0..r).map(|j| agg[j] * f[[i, j]]).sum::<C64>() / n).collect();
            Ok(total + sbm_gamma_block(m, z, &h, side)? / z)
        }
        (ModelSpec::Dense(_), GammaVector::Node(v)) => {
            if v.len() != spec.n() {
                return invalid(format!("node vector has length {}, expected {}", v.len(), spec.n()));
            }
            let k = match side {
                Side::Right => spec.k_dense(),
                Side::Left => spec.k_dense().t().to_owned(),
            };
            Ok(neumann_gamma(&k, rho, z, v))
        }
        (ModelSpec::Dense(_), GammaVector::Block(_)) => invalid("block vectors need a block model"),
    }
}

fn sbm_gamma_block(m: &SbmModel, z: C64, h: &[C64], side: Side) -> Result<C64> {
    let s = sbm_summary(m);
    match side {
        Side::Right => block_resolvent(&s.modularity, &s.p, m.n(), z, h),
        Side::Left => block_resolvent(&s.pi.dot(m.f()).t().to_owned(), &s.q, m.n(), z, h),
    }
}

/// Truncated Neumann series for `Gamma`, summed until the geometric tail
/// `(rho/|z|)^T / (1 - rho/|z|)` drops below `1e-12`.
pub fn neumann_gamma(k: &Array2<f64>, rho: f64, z: C64, xi: &[C64]) -> C64 {
    let ratio = rho / z.norm();
    let terms = if ratio <= 0.0 {
        1
    } else {
        ((1e-12 * (1.0 - ratio)).ln() / ratio.ln()).ceil().max(1.0) as usize + 10
    };
    let mut v: Vec<C64> = xi.to_vec();
    let mut total = C64::new(0.0, 0.0);
    for t in 0..terms.min(1_000_000) {
        total += v.iter().sum::<C64>();
        if t + 1 == terms {
            break;
        }
        v = k.outer_iter().map(|row| row.iter().zip(&v).map(|(a, b)| b * *a).sum::<C64>() / z).collect();
    }
    total
}

/// Predicted overlaps `a[i, j]`, `b[i, j]` and eigendefects for the outliers.
///
/// Complex eigenvalues enter through `|mu_i|^2` and entrywise moduli
/// `|phi_i|^2`, which coincides with the real formulas when everything is real.
pub fn overlap_prediction(spec: &ModelSpec) -> Result<OverlapPrediction> {
    let es = expected_spectrum(spec)?;
    overlap_from_spectrum(spec, &es)
}

pub fn overlap_from_spectrum(spec: &ModelSpec, es: &ExpectedSpectrum) -> Result<OverlapPrediction> {
    let r0 = es.r0;
    if r0 == 0 {
        return Ok(OverlapPrediction {
            a: Array2::zeros((0, 0)),
            b: Array2::zeros((0, 0)),
            right_defects: Vec::new(),
            left_defects: Vec::new(),
            empty: true,
        });
    }
    let mut a = Array2::zeros((r0, r0));
    let mut b = Array2::zeros((r0, r0));
    let mut right_defects = Vec::with_capacity(r0);
    let mut left_defects = Vec::with_capacity(r0);
    match (spec, &es.block) {
        (ModelSpec::Sbm(m), Some(bv)) => {
            let s = &bv.summary;
            let pif_t = s.pi.dot(m.f()).t().to_owned();
            for i in 0..r0 {
                let z = C64::new(es.mu[i].norm_sqr(), 0.0);
                let fi2: Vec<C64> = bv.f.column(i).iter().map(|x| C64::new(x.norm_sqr(), 0.0)).collect();
                let gi2: Vec<C64> = bv.g.column(i).iter().map(|x| C64::new(x.norm_sqr(), 0.0)).collect();
                let dr = block_resolvent(&s.modularity, &s.p, 1, z, &fi2)?.re;
                let dl = block_resolvent(&pif_t, &s.q, 1, z, &gi2)?.re;
                right_defects.push(dr / z.re);
                left_defects.push(dl / z.re);
                for j in 0..r0 {
                    let fij: Vec<C64> = bv.f.column(i).iter().zip(bv.f.column(j)).map(|(x, y)| x.conj() * y).collect();
                    let gij: Vec<C64> = bv.g.column(i).iter().zip(bv.g.column(j)).map(|(x, y)| x.conj() * y).collect();
                    a[[i, j]] = inner(&s.p, &fij).norm() / dr.sqrt();
                    b[[i, j]] = inner(&s.q, &gij).norm() / dl.sqrt();
                }
            }
        }
        _ => {
            let n = spec.n();
            let k = spec.k_dense();
            for i in 0..r0 {
                let z = es.mu[i].norm_sqr();
                for (side, vecs, defects, out) in [
                    (Side::Right, &es.phi, &mut right_defects, &mut a),
                    (Side::Left, &es.xi, &mut left_defects, &mut b),
                ] {
                    let sq: Vec<C64> = vecs.column(i).iter().map(|x| C64::new(x.norm_sqr(), 0.0)).collect();
                    let kk = if side == Side::Right { k.clone() } else { k.t().to_owned() };
                    let sys = Array2::from_shape_fn((n, n), |(x, y)| {
                        C64::new(if x == y { z } else { 0.0 } - kk[[x, y]], 0.0)
                    });
                    let sol = lu_solve(&sys, &sq)?;
                    defects.push(sol.iter().map(|v| v.norm()).sum());
                    let g = gamma_functional(spec, C64::new(z, 0.0), &GammaVector::Node(sq), side)?.re;
                    for j in 0..r0 {
                        let ip: C64 = vecs.column(i).iter().zip(vecs.column(j)).map(|(x, y)| x.conj() * y).sum();
                        out[[i, j]] = ip.norm() / g.sqrt();
                    }
                }
            }
        }
    }
    Ok(OverlapPrediction { a, b, right_defects, left_defects, empty: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_block_spec, DenseModel};
    use ndarray::array;

    #[test]
    fn two_block_spectrum() {
        let spec = ModelSpec::from(two_block_spec(10.0, 0.9, 1000).unwrap());
        let es = expected_spectrum(&spec).unwrap();
        assert!((es.mu[0].re - 4.0).abs() < 1e-12);
        assert!((es.mu[1].re - 1.0).abs() < 1e-12);
        assert!((es.theta_threshold - 2.0).abs() < 1e-12);
        assert_eq!(es.r0, 1);
        assert!(es.tau.unwrap() < 1.0);
        let norm: f64 = es.phi.column(0).iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_case_kills_second_eigenvalue() {
        let spec = ModelSpec::from(two_block_spec(10.0, 0.5, 100).unwrap());
        let es = expected_spectrum(&spec).unwrap();
        assert!(es.mu[1].norm() < 1e-12);
        let op = overlap_from_spectrum(&spec, &es).unwrap();
        assert_eq!(op.a.dim(), (1, 1));
    }

    #[test]
    fn equal_eigenvalues_are_degenerate() {
        let spec = ModelSpec::from(two_block_spec(10.0, 1.0, 100).unwrap());
        assert!(matches!(expected_spectrum(&spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gamma_of_zero_kernel_is_the_sum() {
        let spec = ModelSpec::from(DenseModel::unweighted(Array2::zeros((3, 3))).unwrap());
        let v = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(-0.5, 0.0)];
        let g = gamma_functional(&spec, C64::new(2.0, 0.0), &GammaVector::Node(v), Side::Right).unwrap();
        assert!((g - C64::new(2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gamma_inside_radius_diverges() {
        let spec = ModelSpec::from(two_block_spec(10.0, 0.9, 100).unwrap());
        let h = GammaVector::Block(vec![C64::new(1.0, 0.0); 2]);
        assert!(matches!(
            gamma_functional(&spec, C64::new(3.0, 0.0), &h, Side::Right),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn orthogonal_eigenvectors_give_zero_cross_overlap() {
        let f = array![[6.0, 1.0], [1.0, 6.0]];
        let spec = ModelSpec::from(SbmModel::balanced(f, 100).unwrap());
        let es = expected_spectrum(&spec).unwrap();
        assert_eq!(es.r0, 2);
        let op = overlap_from_spectrum(&spec, &es).unwrap();
        assert!(op.a[[0, 1]].abs() < 1e-12 && op.a[[1, 0]].abs() < 1e-12);
        assert!(op.a[[0, 0]] > 0.0 && op.a[[0, 0]] <= 1.0);
    }
}
