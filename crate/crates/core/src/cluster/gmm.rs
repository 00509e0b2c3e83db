//! Full-covariance Gaussian mixtures fitted by EM.
//!
//! The M-step covariance is `(S_c + lambda I) / N_c` with
//! `lambda = eps * n * mean_diag(pooled covariance)`. This is the exact MAP
//! update under the fixed prior `exp(-lambda tr(C^-1) / 2)` on each
//! covariance, so EM ascends the penalised log-likelihood monotonically, and
//! every covariance keeps its smallest eigenvalue above
//! `eps * mean_diag(pooled covariance)`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::kmeans::kmeans_pp;
use super::Partition;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug)]
pub struct GmmOptions {
    pub restarts: usize,
    /// Relative change of the objective at which EM stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Covariance regularisation relative to the pooled mean variance.
    pub reg: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions { restarts: 10, tol: 1e-7, max_iter: 500, reg: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    /// `k x dim`.
    pub means: Array2<f64>,
    pub covariances: Vec<Array2<f64>>,
    /// Plain log-likelihood of the data under the fitted model.
    pub log_likelihood: f64,
}

#[derive(Clone, Debug)]
pub struct GmmRun {
    pub model: GmmModel,
    pub partition: Partition,
    /// Penalised log-likelihood after each E-step, starting from the initial model.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Lower Cholesky factor, or `None` if `a` is not numerically positive definite.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let d = a.nrows();
    let mut l = Array2::zeros((d, d));
    for j in 0..d {
        let mut s = a[[j, j]];
        for k in 0..j {
            s -= l[[j, k]] * l[[j, k]];
        }
        if !(s > 0.0) {
            return None;
        }
        let ljj = s.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut t = a[[i, j]];
            for k in 0..j {
                t -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = t / ljj;
        }
    }
    Some(l)
}

/// `tr(C^-1)` from the Cholesky factor.
fn trace_inverse(l: &Array2<f64>) -> f64 {
    let d = l.nrows();
    let mut total = 0.0;
    for c in 0..d {
        // Solve L y = e_c; tr(C^-1) = sum_c |y_c|^2.
        let mut y = vec![0.0; d];
        for i in c..d {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        total += y.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

struct Factored {
    chol: Vec<Array2<f64>>,
    log_norm: Vec<f64>,
}

fn factor(model: &GmmModel) -> Option<Factored> {
    let d = model.means.ncols() as f64;
    let mut chol = Vec::with_capacity(model.covariances.len());
    let mut log_norm = Vec::with_capacity(model.covariances.len());
    for (c, cov) in model.covariances.iter().enumerate() {
        let l = cholesky(cov)?;
        let logdet: f64 = l.diag().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        log_norm.push(model.weights[c].ln() - 0.5 * (d * (2.0 * PI).ln() + logdet));
        chol.push(l);
    }
    Some(Factored { chol, log_norm })
}

/// Log of `w_c N(x; m_c, C_c)` for every point and component.
fn log_joint(points: ArrayView2<f64>, model: &GmmModel, f: &Factored) -> Array2<f64> {
    let (n, d) = points.dim();
    let k = model.weights.len();
    let mut out = Array2::zeros((n, k));
    let mut z = vec![0.0; d];
    for c in 0..k {
        let l = &f.chol[c];
        let m = model.means.row(c);
        for (i, x) in points.outer_iter().enumerate() {
            let mut q = 0.0;
            for a in 0..d {
                let mut s = x[a] - m[a];
                for b in 0..a {
                    s -= l[[a, b]] * z[b];
                }
                z[a] = s / l[[a, a]];
                q += z[a] * z[a];
            }
            out[[i, c]] = f.log_norm[c] - 0.5 * q;
        }
    }
    out
}

/// Responsibilities in place of `lj` and the total log-likelihood.
fn normalise_rows(lj: &mut Array2<f64>) -> f64 {
    let mut total = 0.0;
    for mut row in lj.outer_iter_mut() {
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = row.iter().map(|v| (v - mx).exp()).sum();
        let lse = mx + s.ln();
        total += lse;
        row.mapv_inplace(|v| (v - lse).exp());
    }
    total
}

fn pooled_covariance(points: ArrayView2<f64>) -> Array2<f64> {
    let n = points.nrows() as f64;
    let mean = points.mean_axis(Axis(0)).unwrap();
    let centred = &points - &mean;
    centred.t().dot(&centred) / n
}

fn penalty(f: &Factored, lambda: f64) -> f64 {
    -0.5 * lambda * f.chol.iter().map(trace_inverse).sum::<f64>()
}

fn m_step(points: ArrayView2<f64>, resp: &Array2<f64>, lambda: f64) -> Result<GmmModel> {
    let (n, d) = points.dim();
    let k = resp.ncols();
    let mut weights = Vec::with_capacity(k);
    let mut means = Array2::zeros((k, d));
    let mut covariances = Vec::with_capacity(k);
    for c in 0..k {
        let r = resp.column(c);
        let nk: f64 = r.sum();
        if !(nk > 1e-10 * n as f64) {
            return Err(Error::Collapse(c));
        }
        let mean: Array1<f64> = points.t().dot(&r) / nk;
        let centred = &points - &mean;
        let weighted = &centred * &r.insert_axis(Axis(1));
        let mut cov = centred.t().dot(&weighted);
        for a in 0..d {
            cov[[a, a]] += lambda;
        }
        cov /= nk;
        weights.push(nk / n as f64);
        means.row_mut(c).assign(&mean);
        covariances.push(cov);
    }
    Ok(GmmModel { weights, means, covariances, log_likelihood: f64::NAN })
}

/// Initial model: k-means++ centers, uniform weights, pooled covariance.
pub fn gmm_init(points: ArrayView2<f64>, k: usize, seed: u64, opts: &GmmOptions) -> GmmModel {
    let mut rng = rng_from_seed(seed);
    let means = kmeans_pp(points, k, &mut rng);
    let mut pooled = pooled_covariance(points);
    let d = pooled.nrows();
    let floor = opts.reg * pooled.diag().mean().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    for a in 0..d {
        pooled[[a, a]] += floor;
    }
    GmmModel { weights: vec![1.0 / k as f64; k], means, covariances: vec![pooled; k], log_likelihood: f64::NAN }
}

/// One EM run from `init`.
pub fn gmm_em(points: ArrayView2<f64>, init: GmmModel, opts: &GmmOptions) -> Result<GmmRun> {
    let n = points.nrows();
    let pooled = pooled_covariance(points);
    let lambda = opts.reg * n as f64 * pooled.diag().mean().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut model = init;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let k = model.weights.len();
    loop {
        let f = factor(&model).ok_or(Error::Collapse(k))?;
        let mut resp = log_joint(points, &model, &f);
        let ll = normalise_rows(&mut resp);
        if !ll.is_finite() {
            return Err(Error::Collapse(k));
        }
        model.log_likelihood = ll;
        let objective = ll + penalty(&f, lambda);
        let done = trace.last().is_some_and(|prev: &f64| (objective - prev).abs() <= opts.tol * prev.abs().max(1.0));
        trace.push(objective);
        if done || iterations >= opts.max_iter {
            let labels = resp
                .outer_iter()
                .map(|row| row.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (c, &v)| if v > a.1 { (c, v) } else { a }).0)
                .collect();
            return Ok(GmmRun { model, partition: Partition { labels, k }, trace, iterations });
        }
        model = m_step(points, &resp, lambda)?;
        iterations += 1;
    }
}

/// Best of `opts.restarts` EM runs by final log-likelihood. Runs that
/// collapse are discarded; if all do, the fit fails.
pub fn gmm_fit(points: ArrayView2<f64>, k: usize, opts: &GmmOptions, seed: u64) -> Result<GmmRun> {
    let (n, d) = points.dim();
    if k == 0 || n < k * (d + 1) {
        return invalid(format!("need n >= k (dim + 1), got n = {n}, k = {k}, dim = {d}"));
    }
    if opts.restarts == 0 {
        return invalid("restarts must be positive");
    }
    let runs: Vec<Result<GmmRun>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, &[r as u64]);
            gmm_em(points, gmm_init(points, k, s, opts), opts)
        })
        .collect();
    let mut best: Option<GmmRun> = None;
    for run in runs.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| run.model.log_likelihood > b.model.log_likelihood) {
            best = Some(run);
        }
    }
    best.ok_or(Error::Collapse(opts.restarts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn two_clouds(n: usize, sep: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + if j == 0 { sep * labels[i] as f64 } else { 0.0 }
        });
        (pts, labels)
    }

    #[test]
    fn separated_clouds_are_recovered() {
        let (pts, truth) = two_clouds(400, 10.0, 3);
        let run = gmm_fit(pts.view(), 2, &GmmOptions::default(), 1).unwrap();
        assert_eq!(crate::cluster::adjusted_overlap(&truth, &run.partition.labels).unwrap(), 1.0);
        assert!((run.model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_component_is_sample_moments() {
        let (pts, _) = two_clouds(300, 3.0, 5);
        let run = gmm_fit(pts.view(), 1, &GmmOptions::default(), 0).unwrap();
        let mean = pts.mean_axis(Axis(0)).unwrap();
        let cov = pooled_covariance(pts.view());
        let floor = 1e-6 * cov.diag().mean().unwrap();
        for a in 0..2 {
            assert!((run.model.means[[0, a]] - mean[a]).abs() < 1e-12);
            for b in 0..2 {
                let want = cov[[a, b]] + if a == b { floor } else { 0.0 };
                assert!((run.model.covariances[0][[a, b]] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cholesky_and_trace_inverse() {
        let a = ndarray::array![[4.0, 2.0], [2.0, 3.0]];
        let l = cholesky(&a).unwrap();
        assert!((l.dot(&l.t()) - &a).iter().all(|v| v.abs() < 1e-14));
        // inverse of a is [[3, -2], [-2, 4]] / 8
        assert!((trace_inverse(&l) - 7.0 / 8.0).abs() < 1e-14);
        assert!(cholesky(&ndarray::array![[1.0, 2.0], [2.0, 1.0]]).is_none());
    }
}
