//! Multitype Galton-Watson trees with Poisson offspring and the normalised
//! population martingale `U_i(j, t) = nu_i^-t sum_k N_k(T_j, t) f_i(k)`,
//! whose limit describes the fluctuations of eigenvector entries.
//!
//! Only per-type generation counts are tracked. A type-`l` vertex has
//! `Poi(M[l, k])` children of type `k`, so given generation `t` the type-`k`
//! count of generation `t + 1` is `Poi(sum_l N_l M[l, k])`; drawing that sum
//! directly is exact in law and costs `O(r)` per generation whatever the
//! population.

use ndarray::Array2;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::theory::LimitMoments;

/// Generation counts above this are treated as overflow and the sample is
/// excluded.
pub const COUNT_CAP: f64 = 1e250;
/// Above this mean, Poisson draws use the normal approximation; the relative
/// error is far below Monte Carlo resolution.
const NORMAL_APPROX_MEAN: f64 = 1e15;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Clone, Debug)]
pub struct GwConfig {
    /// Offspring means, `M[l, k]` children of type `k` per type-`l` vertex.
    pub m: Array2<f64>,
    /// Eigenvectors of `M` as columns.
    pub f: Array2<f64>,
    pub nu: Vec<f64>,
    pub depth: usize,
    pub n_samples: usize,
    pub root_type: usize,
}

impl GwConfig {
    pub fn from_moments(lm: &LimitMoments, depth: usize, n_samples: usize, root_type: usize) -> Result<Self> {
        let cfg = GwConfig { m: lm.modularity.clone(), f: lm.f.clone(), nu: lm.nu.clone(), depth, n_samples, root_type };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.m.nrows();
        if self.m.ncols() != r || self.f.nrows() != r {
            return invalid("offspring matrix and eigenvectors have inconsistent shapes");
        }
        if self.m.iter().any(|v| !(*v >= 0.0)) {
            return invalid("offspring means must be nonnegative");
        }
        if self.depth == 0 {
            return invalid("depth must be at least 1");
        }
        if self.root_type >= r {
            return invalid(format!("root type {} out of range for r = {r}", self.root_type));
        }
        if self.nu.len() != self.f.ncols() {
            return invalid("need one eigenvalue per eigenvector");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleSample {
    /// `U_i(j, t)` for `t = 0..=depth`.
    pub values: Vec<f64>,
    pub extinct: bool,
}

#[derive(Clone, Debug)]
pub struct GwSimulation {
    pub samples: Vec<MartingaleSample>,
    /// Samples dropped because a generation count exceeded [`COUNT_CAP`].
    pub overflowed: usize,
}

impl GwSimulation {
    pub fn end_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| *s.values.last().unwrap()).collect()
    }

    pub fn values_at(&self, t: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.values[t]).collect()
    }
}

fn poisson(mean: f64, rng: &mut Rng) -> f64 {
    if mean <= 0.0 {
        0.0
    } else if mean > NORMAL_APPROX_MEAN {
        let z: f64 = StandardNormal.sample(rng);
        (mean + mean.sqrt() * z).round().max(0.0)
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng)
    }
}

fn one_tree(cfg: &GwConfig, i: usize, rng: &mut Rng) -> Option<MartingaleSample> {
    let r = cfg.m.nrows();
    let nu = cfg.nu[i];
    let mut counts = vec![0.0; r];
    counts[cfg.root_type] = 1.0;
    let mut values = Vec::with_capacity(cfg.depth + 1);
    values.push(cfg.f[[cfg.root_type, i]]);
    let mut scale = 1.0;
    let mut extinct = false;
    for _ in 0..cfg.depth {
        scale /= nu;
        if extinct {
            values.push(0.0);
            continue;
        }
        let next: Vec<f64> = (0..r)
            .map(|k| {
                let mean: f64 = (0..r).map(|l| counts[l] * cfg.m[[l, k]]).sum();
                poisson(mean, rng)
            })
            .collect();
        if next.iter().any(|c| *c > COUNT_CAP) {
            return None;
        }
        counts = next;
        extinct = counts.iter().all(|c| *c == 0.0);
        values.push(scale * (0..r).map(|k| counts[k] * cfg.f[[k, i]]).sum::<f64>());
    }
    Some(MartingaleSample { values, extinct })
}

/// Simulates `cfg.n_samples` independent trees rooted at `cfg.root_type` and
/// records the martingale for eigenpair `i`. Sample `s` uses the seed
/// `derive_seed(seed, [s])`, so results do not depend on thread count.
pub fn simulate_martingale(cfg: &GwConfig, i: usize, seed: u64) -> Result<GwSimulation> {
    cfg.validate()?;
    if i >= cfg.nu.len() {
        return invalid(format!("eigen index {i} out of range"));
    }
    if cfg.nu[i] == 0.0 {
        return invalid("eigenvalue must be nonzero");
    }
    let raw: Vec<Option<MartingaleSample>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| one_tree(cfg, i, &mut rng_from_seed(derive_seed(seed, &[s as u64]))))
        .collect();
    let overflowed = raw.iter().filter(|s| s.is_none()).count();
    Ok(GwSimulation { samples: raw.into_iter().flatten().collect(), overflowed })
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub target_mean: f64,
    pub target_variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub z_mean: f64,
    pub z_variance: f64,
    /// Fraction of values exactly zero.
    pub atom_fraction: f64,
    /// Kolmogorov-Smirnov distance to `N(target_mean, target_variance)`.
    pub ks_distance: f64,
}

/// Compares sample mean and variance with targets using Monte Carlo
/// standard errors (`se_var` from the sample fourth central moment).
pub fn moment_check(values: &[f64], target_mean: f64, target_variance: f64) -> Result<MomentReport> {
    let n = values.len();
    if n < MIN_SAMPLES {
        return invalid(format!("need at least {MIN_SAMPLES} samples, got {n}"));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let variance = m2 * nf / (nf - 1.0);
    let se_mean = (variance / nf).sqrt();
    let se_variance = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    let z = |diff: f64, se: f64| if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    let atom_fraction = values.iter().filter(|v| **v == 0.0).count() as f64 / nf;
    Ok(MomentReport {
        n,
        mean,
        variance,
        target_mean,
        target_variance,
        se_mean,
        se_variance,
        z_mean: z(mean - target_mean, se_mean),
        z_variance: z(variance - target_variance, se_variance),
        atom_fraction,
        ks_distance: ks_normal(values, target_mean, target_variance),
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and a
/// normal law.
pub fn ks_normal(values: &[f64], mean: f64, variance: f64) -> f64 {
    let Ok(normal) = Normal::new(mean, variance.max(0.0).sqrt()) else {
        return f64::NAN;
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = normal.cdf(v);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Moment report for every `(i, j)`: eigenpair `i`, root type `j`.
pub fn check_all(lm: &LimitMoments, depth: usize, n_samples: usize, seed: u64) -> Result<Vec<(usize, usize, MomentReport, usize)>> {
    let mut out = Vec::new();
    for i in 0..lm.nu.len() {
        for j in 0..lm.f.nrows() {
            let cfg = GwConfig::from_moments(lm, depth, n_samples, j)?;
            let sim = simulate_martingale(&cfg, i, derive_seed(seed, &[i as u64, j as u64]))?;
            // Z_{i,j} is the limit of U_i(j, t) / gamma_i.
            let z: Vec<f64> = sim.end_values().iter().map(|v| v / lm.gamma[i]).collect();
            let rep = moment_check(&z, lm.mean[[i, j]], lm.variance[[i, j]])?;
            out.push((i, j, rep, sim.overflowed));
        }
    }
    Ok(out)
}
