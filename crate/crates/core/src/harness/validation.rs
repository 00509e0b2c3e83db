use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Continuous, Normal};

use super::experiment::csv_error;
use crate::eigen::{top_eigenpairs, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::model::{sample, sizes_from_proportions, two_block_spec, ModelSpec, SbmModel};
use crate::rng::derive_seed;
use crate::sparse::C64;
use crate::theory::{expected_spectrum, limit_moments, overlap_from_spectrum, LimitMoments};

/// `|<u, phi>|` for complex unit vectors.
fn overlap(u: ndarray::ArrayView1<C64>, phi: ndarray::ArrayView1<C64>) -> f64 {
    u.iter().zip(phi).map(|(a, b)| a.conj() * b).sum::<C64>().norm()
}

/// One sampled two-block graph: the top two eigenpairs against the expected
/// eigenvectors and the predicted overlaps.
#[derive(Clone, Debug)]
pub struct OverlapRow {
    pub eta: f64,
    pub run: usize,
    pub seed: u64,
    /// Predicted number of outliers.
    pub r0: usize,
    pub lambda: Option<[C64; 2]>,
    /// `overlaps[i][j] = |<u_i, phi_j>|`.
    pub overlaps: Option<[[f64; 2]; 2]>,
    pub a11: Option<f64>,
    /// Absent below the two-eigenvalue threshold.
    pub a22: Option<f64>,
    pub error: Option<String>,
}

pub const OVERLAP_HEADER: [&str; 15] = [
    "eta", "run", "seed", "r0", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "o11", "o12", "o21", "o22",
    "a11", "a22", "error",
];

/// Samples `runs` two-block graphs per eta and records the empirical
/// eigenvector overlaps next to their predictions.
pub fn run_overlap_validation(s: f64, eta_grid: &[f64], n: usize, runs: usize, seed: u64) -> Result<Vec<OverlapRow>> {
    if runs == 0 {
        return invalid("runs must be at least 1");
    }
    let mut points = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        if !(0.5..1.0).contains(&eta) {
            return invalid(format!("eta = {eta} must lie in [1/2, 1)"));
        }
        let spec = ModelSpec::Sbm(two_block_spec(s, eta, n)?);
        let es = expected_spectrum(&spec)?;
        let pred = overlap_from_spectrum(&spec, &es)?;
        let a = |i: usize| (es.r0 > i).then(|| pred.a[[i, i]]);
        points.push((eta, spec, es.phi.clone(), es.r0, a(0), a(1)));
    }
    let tasks: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..runs).map(move |r| (p, r))).collect();
    Ok(tasks
        .par_iter()
        .map(|&(p, run)| {
            let (eta, spec, phi, r0, a11, a22) = &points[p];
            let seed = derive_seed(seed, &[p as u64, run as u64]);
            let mut row =
                OverlapRow { eta: *eta, run, seed, r0: *r0, lambda: None, overlaps: None, a11: *a11, a22: *a22, error: None };
            let result = sample(spec, seed).and_then(|a| top_eigenpairs(&a, 2, &SolverConfig::with_seed(seed)));
            match result {
                Ok(pairs) => {
                    row.lambda = Some([pairs.values[0], pairs.values[1]]);
                    let o = |i: usize, j: usize| overlap(pairs.right.column(i), phi.column(j));
                    row.overlaps = Some([[o(0, 0), o(0, 1)], [o(1, 0), o(1, 1)]]);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect())
}

pub fn write_overlap_csv<W: Write>(rows: &[OverlapRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OVERLAP_HEADER).map_err(csv_error)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let mut rec = vec![fmt_f64(r.eta), r.run.to_string(), r.seed.to_string(), r.r0.to_string()];
        match r.lambda {
            Some(l) => rec.extend([l[0].re, l[0].im, l[1].re, l[1].im].map(fmt_f64)),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        match r.overlaps {
            Some(o) => rec.extend([o[0][0], o[0][1], o[1][0], o[1][1]].map(fmt_f64)),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        rec.push(opt(r.a11));
        rec.push(opt(r.a22));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapPoint {
    pub eta: f64,
    /// Runs without errors.
    pub runs: usize,
    pub mean_lambda1: f64,
    pub mean_lambda2_modulus: f64,
    pub mean_o11: f64,
    pub se_o11: f64,
    pub mean_o22: f64,
    pub se_o22: f64,
    pub a11: Option<f64>,
    pub a22: Option<f64>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    (mean, (var / m).sqrt())
}

/// Averages per eta, in grid order. Points where every run failed are left
/// out.
pub fn summarize_overlaps(rows: &[OverlapRow]) -> Vec<OverlapPoint> {
    let mut etas: Vec<f64> = Vec::new();
    for r in rows {
        if !etas.contains(&r.eta) {
            etas.push(r.eta);
        }
    }
    etas.iter()
        .filter_map(|&eta| {
            let ok: Vec<&OverlapRow> = rows.iter().filter(|r| r.eta == eta && r.error.is_none()).collect();
            let first = rows.iter().find(|r| r.eta == eta)?;
            if ok.is_empty() {
                return None;
            }
            let pick = |f: &dyn Fn(&OverlapRow) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_o11, se_o11) = mean_se(&pick(&|r| r.overlaps.unwrap()[0][0]));
            let (mean_o22, se_o22) = mean_se(&pick(&|r| r.overlaps.unwrap()[1][1]));
            Some(OverlapPoint {
                eta,
                runs: ok.len(),
                mean_lambda1: mean_se(&pick(&|r| r.lambda.unwrap()[0].re)).0,
                mean_lambda2_modulus: mean_se(&pick(&|r| r.lambda.unwrap()[1].norm())).0,
                mean_o11,
                se_o11,
                mean_o22,
                se_o22,
                a11: first.a11,
                a22: first.a22,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FluctuationConfig {
    pub f: Array2<f64>,
    pub proportions: Vec<f64>,
    pub n: usize,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramRow {
    pub eigen_index: usize,
    pub cluster: usize,
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
    /// Count over (all entries of this eigenvector times bin width), so the
    /// clusters of one eigenvector add up to a probability density.
    pub density: f64,
    /// `p_j N(mu_ij, sigma2_ij)` at the bin centre.
    pub model_density: f64,
}

pub const HISTOGRAM_HEADER: [&str; 7] = ["eigen_index", "cluster", "bin_left", "bin_right", "count", "density", "model_density"];

#[derive(Clone, Debug, Serialize)]
pub struct ClusterMoment {
    pub eigen_index: usize,
    pub cluster: usize,
    pub count: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub target_mean: f64,
    pub target_variance: f64,
    pub z_mean: f64,
    pub zero_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct Fluctuations {
    pub moments: LimitMoments,
    /// `entries[i][j]`: the values of `sqrt(n) u_i` on cluster `j`, over all
    /// samples.
    pub entries: Vec<Vec<Vec<f64>>>,
    pub histogram: Vec<HistogramRow>,
    pub cluster_moments: Vec<ClusterMoment>,
}

/// Entries of `sqrt(n) u_i` grouped by true cluster over several sampled
/// graphs, with histograms and per-cluster moments against the limits.
///
/// Each sampled eigenvector is rotated so that its inner product with the
/// lifted `f_i` is real and positive, then its real part is kept.
pub fn run_fluctuation_histograms(cfg: &FluctuationConfig) -> Result<Fluctuations> {
    if cfg.samples == 0 || cfg.bins == 0 {
        return invalid("samples and bins must be positive");
    }
    let sizes = sizes_from_proportions(cfg.n, &cfg.proportions)?;
    let model = SbmModel::with_sizes(cfg.f.clone(), &sizes)?;
    let lm = limit_moments(&model)?;
    let r0 = lm.nu.len();
    if r0 == 0 {
        return Err(Error::Unsupported("no eigenvalue above the detection threshold".into()));
    }
    let r = model.r();
    let sigma = model.sigma_left().to_vec();
    let spec = ModelSpec::Sbm(model);
    let scale = (cfg.n as f64).sqrt();
    let per_sample: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|s| {
            let seed = derive_seed(cfg.seed, &[s as u64]);
            let a = sample(&spec, seed)?;
            let pairs = top_eigenpairs(&a, r0, &SolverConfig::with_seed(seed))?;
            Ok((0..r0)
                .map(|i| {
                    let u = pairs.right.column(i);
                    let z: C64 = u.iter().zip(&sigma).map(|(x, &c)| x * lm.f[[c, i]]).sum();
                    let rot = if z.norm() > 0.0 { z.conj() / z.norm() } else { C64::new(1.0, 0.0) };
                    u.iter().map(|x| scale * (x * rot).re).collect()
                })
                .collect())
        })
        .collect();
    let mut entries = vec![vec![Vec::new(); r]; r0];
    for vecs in per_sample {
        for (i, v) in vecs?.into_iter().enumerate() {
            for (x, val) in v.into_iter().enumerate() {
                entries[i][sigma[x]].push(val);
            }
        }
    }
    let mut histogram = Vec::new();
    let mut cluster_moments = Vec::new();
    for i in 0..r0 {
        let all = entries[i].iter().flatten();
        let (lo, hi) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let total = entries[i].iter().map(Vec::len).sum::<usize>() as f64;
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / cfg.bins as f64;
        for j in 0..r {
            let mut counts = vec![0usize; cfg.bins];
            for &v in &entries[i][j] {
                counts[(((v - lo) / width) as usize).min(cfg.bins - 1)] += 1;
            }
            let sd = lm.variance[[i, j]].max(0.0).sqrt();
            let normal = Normal::new(lm.mean[[i, j]], sd).ok();
            for (b, &count) in counts.iter().enumerate() {
                let left = lo + b as f64 * width;
                let centre = left + width / 2.0;
                histogram.push(HistogramRow {
                    eigen_index: i,
                    cluster: j,
                    bin_left: left,
                    bin_right: left + width,
                    count,
                    density: count as f64 / (total * width),
                    model_density: normal.as_ref().map_or(0.0, |d| lm.p[j] * d.pdf(centre)),
                });
            }
            let v = &entries[i][j];
            let (mean, se_mean) = mean_se(v);
            let m = v.len() as f64;
            let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            cluster_moments.push(ClusterMoment {
                eigen_index: i,
                cluster: j,
                count: v.len(),
                mean,
                se_mean,
                variance,
                target_mean: lm.mean[[i, j]],
                target_variance: lm.variance[[i, j]],
                z_mean: (mean - lm.mean[[i, j]]) / se_mean,
                zero_fraction: v.iter().filter(|x| x.abs() < 1e-12).count() as f64 / m,
            });
        }
    }
    Ok(Fluctuations { moments: lm, entries, histogram, cluster_moments })
}

pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_HEADER).map_err(csv_error)?;
    for h in rows {
        w.write_record([
            h.eigen_index.to_string(),
            h.cluster.to_string(),
            fmt_f64(h.bin_left),
            fmt_f64(h.bin_right),
            h.count.to_string(),
            fmt_f64(h.density),
            fmt_f64(h.model_density),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
