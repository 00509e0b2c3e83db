//! Limiting per-cluster moments of eigenvector entries in a block model with
//! shared left and right memberships.
//!
//! With `f_i` normalised by `<p, f_i^2> = 1` and
//! `gamma_i^2 = <p, (I - nu_i^-2 M)^-1 f_i^2>`, the entries of the unit
//! eigenvector `sqrt(n) u_i` on cluster `j` concentrate around
//! `f_i(j) / gamma_i` with second moment `[(I - nu_i^-2 M)^-1 f_i^2](j) / gamma_i^2`.

use ndarray::Array2;

use super::expected_spectrum;
use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::model::{ModelSpec, SbmModel};
use crate::sparse::C64;

#[derive(Clone, Debug)]
pub struct LimitMoments {
    /// Real outlier eigenvalues `nu_1..nu_r0` of `M`.
    pub nu: Vec<f64>,
    /// `r x r0` eigenvectors with `<p, f_i^2> = 1`.
    pub f: Array2<f64>,
    pub gamma: Vec<f64>,
    /// `mean[i, j]`: limiting mean of eigenvector `i` on cluster `j`.
    pub mean: Array2<f64>,
    pub second_moment: Array2<f64>,
    pub variance: Array2<f64>,
    /// Cluster proportions.
    pub p: Vec<f64>,
    /// Modularity matrix `M = F diag(p)`.
    pub modularity: Array2<f64>,
}

pub fn limit_moments(m: &SbmModel) -> Result<LimitMoments> {
    if !m.same_memberships() {
        return Err(Error::Unsupported("moments need identical left and right memberships".into()));
    }
    let es = expected_spectrum(&ModelSpec::Sbm(m.clone()))?;
    let bv = es.block.as_ref().expect("block model");
    let r = m.r();
    let r0 = es.r0;
    if es.mu[..r0].iter().any(|v| v.im != 0.0) {
        return Err(Error::Unsupported("moments are defined for real outlier eigenvalues only".into()));
    }
    let p = bv.summary.p.clone();
    let modm = bv.summary.modularity.clone();
    let nu: Vec<f64> = es.mu[..r0].iter().map(|v| v.re).collect();
    let f = Array2::from_shape_fn((r, r0), |(k, i)| bv.f[[k, i]].re);
    let mut gamma = Vec::with_capacity(r0);
    let mut mean = Array2::zeros((r0, r));
    let mut second_moment = Array2::zeros((r0, r));
    for i in 0..r0 {
        let alpha = nu[i].powi(-2);
        let sys = Array2::from_shape_fn((r, r), |(a, b)| {
            C64::new(if a == b { 1.0 } else { 0.0 } - alpha * modm[[a, b]], 0.0)
        });
        let rhs: Vec<C64> = (0..r).map(|k| C64::new(f[[k, i]].powi(2), 0.0)).collect();
        let sol = lu_solve(&sys, &rhs)?;
        let g2: f64 = p.iter().zip(&sol).map(|(w, x)| w * x.re).sum();
        if !(g2 > 0.0) {
            return Err(Error::Numerical(format!("non-positive gamma^2 = {g2} for eigenvalue {i}")));
        }
        let g = g2.sqrt();
        gamma.push(g);
        for j in 0..r {
            mean[[i, j]] = f[[j, i]] / g;
            second_moment[[i, j]] = sol[j].re / g2;
        }
    }
    let variance = &second_moment - &mean.mapv(|x| x * x);
    Ok(LimitMoments { nu, f, gamma, mean, second_moment, variance, p, modularity: modm })
}
