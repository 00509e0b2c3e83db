//! Closed forms for the pathwise (tridiagonal Toeplitz) block model and its
//! two-block special case.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{invalid, Result};

/// `2 sqrt(eta (1 - eta))`.
pub fn theta(eta: f64) -> f64 {
    2.0 * (eta * (1.0 - eta)).max(0.0).sqrt()
}

/// Eigen-decomposition of the pathwise connectivity matrix `F`.
#[derive(Clone, Debug)]
pub struct ToeplitzEigen {
    /// `s/2 + 2 s cos(k pi / (r+1)) sqrt(eta (1 - eta))`, `k = 1..r`, decreasing.
    pub values: Vec<f64>,
    /// Unit right eigenvectors as columns.
    pub right: Array2<f64>,
    /// Unit left eigenvectors as columns.
    pub left: Array2<f64>,
}

fn unit_columns(r: usize, ratio: f64) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((r, r), |(j, i)| {
        let (i, j) = ((i + 1) as f64, (j + 1) as f64);
        ratio.powf(j / 2.0) * (i * j * PI / (r as f64 + 1.0)).sin()
    });
    for mut col in m.columns_mut() {
        let nrm = col.dot(&col).sqrt();
        col /= nrm;
    }
    m
}

pub fn tridiag_toeplitz_eigen(r: usize, s: f64, eta: f64) -> Result<ToeplitzEigen> {
    if r == 0 {
        return invalid("r must be positive");
    }
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta = {eta} must lie strictly inside (0, 1)"));
    }
    let root = (eta * (1.0 - eta)).sqrt();
    let values = (1..=r).map(|k| s / 2.0 + 2.0 * s * (k as f64 * PI / (r as f64 + 1.0)).cos() * root).collect();
    Ok(ToeplitzEigen {
        values,
        right: unit_columns(r, (1.0 - eta) / eta),
        left: unit_columns(r, eta / (1.0 - eta)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdCheck {
    pub detect_all: bool,
    /// `s / r`.
    pub lhs: f64,
    /// `(1/2 + c_1 theta) / min_k (1/2 + c_k theta)^2`; infinite when some
    /// eigenvalue vanishes.
    pub rhs: f64,
}

/// Whether all `r` eigenvalues of the pathwise model are above the detection
/// threshold, i.e. `s / r > (1/2 + c_1 theta) / min_k (1/2 + c_k theta)^2`
/// with `c_k = cos(k pi / (r+1))`.
pub fn pathwise_detection_threshold(r: usize, s: f64, eta: f64) -> ThresholdCheck {
    let th = theta(eta);
    let c = |k: usize| (k as f64 * PI / (r as f64 + 1.0)).cos();
    let first = 0.5 + c(1) * th;
    let min_sq = (1..=r).map(|k| (0.5 + c(k) * th).powi(2)).fold(f64::INFINITY, f64::min);
    let rhs = if min_sq > 0.0 { first / min_sq } else { f64::INFINITY };
    let lhs = s / r as f64;
    ThresholdCheck { detect_all: lhs > rhs, lhs, rhs }
}

/// Smallest `eta` at which both two-block eigenvalues are detectable:
/// `x = 1 + (2 - 2 sqrt(2s+1)) / s`, `eta = (1 + sqrt(1 - x^2)) / 2`.
/// Defined for `s > 4`.
pub fn eta_threshold(s: f64) -> Result<f64> {
    if !(s > 4.0) {
        return invalid(format!("s = {s} must exceed 4"));
    }
    let x = 1.0 + (2.0 - 2.0 * (2.0 * s + 1.0).sqrt()) / s;
    Ok((1.0 + (1.0 - x * x).max(0.0).sqrt()) / 2.0)
}

/// Mean degree used to calibrate pathwise experiments, `(s/k)(3/2 - 1/k^2)`.
///
/// This is the calibration convention, not the exact expectation: summing
/// `F` gives `(s/k)(3/2 - 1/k)`.
pub fn pathwise_mean_degree(k: usize, s: f64) -> f64 {
    let k = k as f64;
    s / k * (1.5 - 1.0 / (k * k))
}

/// Inverse of [`pathwise_mean_degree`] in `s`.
pub fn calibrate_s(k: usize, d: f64) -> f64 {
    let kf = k as f64;
    kf * d / (1.5 - 1.0 / (kf * kf))
}

#[derive(Clone, Debug)]
pub struct TwoBlockReport {
    pub theta: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// `sqrt(nu1)`.
    pub vartheta: f64,
    pub r0: usize,
    /// Exact limiting alignment of the leading right eigenvector, if detectable.
    pub a11: Option<f64>,
    pub a22: Option<f64>,
    /// Large-`s` expansion `1 - (2/s)(1 + theta^2)/(1 + theta)^2`.
    pub a11_asymptotic: f64,
    /// Large-`s` expansion `1 - (2/s)(1 + theta^2)/(1 - theta)^2`.
    pub a22_asymptotic: f64,
    /// True when `nu1 = nu2` (`eta = 1`).
    pub degenerate: bool,
}

/// `a^2 = 1 / <1, (I - x M)^{-1} f^{ii}>` for the two-block model with unit
/// `f`, written out: `(4 - 2xs + x^2 s^2 (1-theta^2)/4) / (4 - xs + xs theta^2)`.
fn two_block_alignment_sq(s: f64, th: f64, nu: f64) -> f64 {
    let xs = s / (nu * nu);
    (4.0 - 2.0 * xs + xs * xs * (1.0 - th * th) / 4.0) / (4.0 - xs + xs * th * th)
}

pub fn two_block_report(s: f64, eta: f64) -> TwoBlockReport {
    let th = theta(eta);
    let nu1 = s * (1.0 + th) / 4.0;
    let nu2 = s * (1.0 - th) / 4.0;
    let vartheta = nu1.sqrt();
    let r0 = [nu1, nu2].iter().filter(|&&v| v > vartheta).count();
    let align = |nu: f64, detected: bool| detected.then(|| two_block_alignment_sq(s, th, nu).max(0.0).sqrt());
    TwoBlockReport {
        theta: th,
        nu1,
        nu2,
        vartheta,
        r0,
        a11: align(nu1, r0 >= 1),
        a22: align(nu2, r0 >= 2),
        a11_asymptotic: 1.0 - 2.0 / s * (1.0 + th * th) / (1.0 + th).powi(2),
        a22_asymptotic: 1.0 - 2.0 / s * (1.0 + th * th) / (1.0 - th).powi(2),
        degenerate: th == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pathwise_f;

    #[test]
    fn toeplitz_pairs_are_eigenpairs() {
        let (r, s, eta) = (5, 7.0, 0.8);
        let e = tridiag_toeplitz_eigen(r, s, eta).unwrap();
        let f = pathwise_f(r, s, eta);
        for k in 0..r {
            let v = e.right.column(k);
            let res = f.dot(&v) - &v * e.values[k];
            assert!(res.iter().all(|x| x.abs() < 1e-12));
            let u = e.left.column(k);
            let res = f.t().dot(&u) - &u * e.values[k];
            assert!(res.iter().all(|x| x.abs() < 1e-12));
        }
        assert!(e.values.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn known_two_block_numbers() {
        let rep = two_block_report(10.0, 0.9);
        assert!((rep.nu1 - 4.0).abs() < 1e-12 && (rep.nu2 - 1.0).abs() < 1e-12);
        assert!((rep.vartheta - 2.0).abs() < 1e-12);
        assert_eq!(rep.r0, 1);
        assert!(rep.a22.is_none());
        assert!((eta_threshold(10.0).unwrap() - 0.97949).abs() < 1e-5);
        assert_eq!(two_block_report(10.0, 0.99).r0, 2);
        assert!(two_block_report(10.0, 1.0).degenerate);
    }

    #[test]
    fn eta_threshold_is_where_second_eigenvalue_crosses() {
        for s in [5.0, 10.0, 40.0] {
            let eta = eta_threshold(s).unwrap();
            let th = theta(eta);
            let (nu1, nu2) = (s * (1.0 + th) / 4.0, s * (1.0 - th) / 4.0);
            assert!((nu2 * nu2 - nu1).abs() < 1e-9 * nu1);
        }
        assert!(eta_threshold(4.0).is_err());
    }

    #[test]
    fn calibration_inverts_mean_degree() {
        for k in 2..8 {
            let s = calibrate_s(k, 3.0);
            assert!((pathwise_mean_degree(k, s) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_block_threshold_agrees_with_report() {
        for eta in [0.9, 0.95, 0.99] {
            let rep = two_block_report(10.0, eta);
            let chk = pathwise_detection_threshold(2, 10.0, eta);
            assert_eq!(chk.detect_all, rep.r0 == 2);
        }
    }
}
