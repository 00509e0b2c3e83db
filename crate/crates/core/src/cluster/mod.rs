//! Spectral clustering of a digraph from the raw adjacency matrix: take the
//! top right and left eigenvectors, embed each node as
//! `(u_1(x), .., u_r0(x), v_1(x), .., v_r0(x))` and fit a Gaussian mixture
//! (or k-means) to the cloud. No trimming, regularisation or normalisation
//! is applied to the graph.

mod gmm;
mod kmeans;

pub use gmm::{gmm_em, gmm_fit, gmm_init, GmmModel, GmmOptions, GmmRun};
pub use kmeans::{kmeans_fit, KMeansFit};

use ndarray::Array2;
use serde::Serialize;

use crate::eigen::{top_eigenpairs, EigenPairs, SolverConfig};
use crate::error::{invalid, Result};
use crate::sparse::{SparseMatrix, C64};

pub const DEFAULT_R0_MARGIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(l) = labels.iter().find(|&&l| l >= k) {
            return invalid(format!("label {l} out of range for k = {k}"));
        }
        Ok(Partition { labels, k })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// Where an embedding column comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ColumnSource {
    pub side: Side,
    /// Index into the eigenpairs.
    pub index: usize,
    pub part: Part,
}

#[derive(Clone, Debug)]
pub struct Embedding {
    /// `n x 2 r0` (fewer when conjugate partners are dropped).
    pub points: Array2<f64>,
    pub r0: usize,
    pub columns: Vec<ColumnSource>,
}

/// Builds the joint right/left embedding from the first `r0` eigenpairs.
///
/// A real eigenvector gives one column. For a conjugate pair the member with
/// positive imaginary part gives two columns (real and imaginary parts) and
/// its partner is dropped, so a pair inside the first `r0` still costs two
/// columns per side.
pub fn embed(pairs: &EigenPairs, r0: usize) -> Result<Embedding> {
    if r0 > pairs.len() {
        return invalid(format!("r0 = {r0} exceeds the {} available eigenpairs", pairs.len()));
    }
    let mut sources = Vec::new();
    for i in 0..r0 {
        let v = pairs.values[i];
        if v.im == 0.0 {
            sources.push((i, Part::Re));
        } else if v.im > 0.0 || !pairs.values[..i].contains(&v.conj()) {
            sources.push((i, Part::Re));
            sources.push((i, Part::Im));
        }
    }
    let n = pairs.right.nrows();
    let mut columns = Vec::with_capacity(2 * sources.len());
    for side in [Side::Right, Side::Left] {
        columns.extend(sources.iter().map(|&(index, part)| ColumnSource { side, index, part }));
    }
    let points = Array2::from_shape_fn((n, columns.len()), |(x, c)| {
        let src = columns[c];
        let m = if src.side == Side::Right { &pairs.right } else { &pairs.left };
        let z = m[[x, src.index]];
        if src.part == Part::Re {
            z.re
        } else {
            z.im
        }
    });
    Ok(Embedding { points, r0, columns })
}

/// Number of eigenvalues with `|lambda_i| > (1 + margin) sqrt(|lambda_1|)`,
/// for values sorted by decreasing modulus.
pub fn estimate_r0(values: &[C64], margin: f64) -> Result<usize> {
    let Some(first) = values.first() else {
        return invalid("no eigenvalues to estimate r0 from");
    };
    let edge = (1.0 + margin) * first.norm().sqrt();
    Ok(values.iter().filter(|v| v.norm() > edge).count())
}

/// Hubert-Arabie adjusted Rand index between two labelings.
pub fn adjusted_overlap(truth: &[usize], guess: &[usize]) -> Result<f64> {
    if truth.len() != guess.len() {
        return invalid(format!("partitions have lengths {} and {}", truth.len(), guess.len()));
    }
    let n = truth.len();
    let compact = |labels: &[usize]| {
        let mut map = std::collections::HashMap::new();
        let out: Vec<usize> = labels.iter().map(|l| { let next = map.len(); *map.entry(*l).or_insert(next) }).collect();
        (out, map.len())
    };
    let (a, ka) = compact(truth);
    let (b, kb) = compact(guess);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(&b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let pairs = |m: u64| (m * m.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&m| pairs(m)).sum();
    let sa: f64 = rows.iter().map(|&m| pairs(m)).sum();
    let sb: f64 = cols.iter().map(|&m| pairs(m)).sum();
    let total = pairs(n as u64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gmm,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum R0 {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct ClusterOptions {
    pub method: Method,
    pub r0: R0,
    pub margin: f64,
    pub gmm: GmmOptions,
    pub kmeans_restarts: usize,
    pub solver: SolverConfig,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            method: Method::Gmm,
            r0: R0::Auto,
            margin: DEFAULT_R0_MARGIN,
            gmm: GmmOptions::default(),
            kmeans_restarts: 10,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    /// `[re, im]` of each computed eigenvalue.
    pub eigenvalues: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub left_residuals: Vec<f64>,
    pub r0: usize,
    /// The r0 rule's raw count before clamping to `1..=k`.
    pub r0_estimate: Option<usize>,
    pub method: Method,
    pub embedding_columns: Vec<ColumnSource>,
    pub log_likelihood: Option<f64>,
    pub cost: Option<f64>,
}

/// Clusters a fitted embedding with the chosen method.
pub fn cluster_embedding(emb: &Embedding, k: usize, opts: &ClusterOptions, seed: u64) -> Result<(Partition, Option<f64>, Option<f64>)> {
    match opts.method {
        Method::Gmm => {
            let run = gmm_fit(emb.points.view(), k, &opts.gmm, seed)?;
            Ok((run.partition, Some(run.model.log_likelihood), None))
        }
        Method::Kmeans => {
            let fit = kmeans_fit(emb.points.view(), k, opts.kmeans_restarts, seed)?;
            Ok((fit.partition, None, Some(fit.cost)))
        }
    }
}

/// Top eigenpairs, r0 (estimated when `Auto`), embedding and fit.
///
/// With `R0::Auto` the number of requested eigenpairs grows (2, 4, .. up to
/// `k`) until the rule sees a non-outlier, so near-tied bulk eigenvalues are
/// never requested needlessly. The estimate is clamped to `1..=k`: a
/// partition is always produced, and a rank-`k` model has at most `k`
/// informative eigenvalues.
pub fn cluster_digraph(a: &SparseMatrix, k: usize, opts: &ClusterOptions, seed: u64) -> Result<(Partition, Diagnostics)> {
    if !a.is_square() {
        return invalid("adjacency matrix must be square");
    }
    if k == 0 {
        return invalid("k must be positive");
    }
    let cap = a.n_rows().saturating_sub(1).max(1);
    let cfg = SolverConfig { seed, ..opts.solver.clone() };
    let (pairs, r0, r0_estimate) = match opts.r0 {
        R0::Fixed(r) => {
            if r == 0 {
                return invalid("r0 must be positive");
            }
            (top_eigenpairs(a, r.min(cap), &cfg)?, r, None)
        }
        R0::Auto => {
            let mut nev = 2.min(cap);
            loop {
                let pairs = top_eigenpairs(a, nev, &cfg)?;
                let est = estimate_r0(&pairs.values, opts.margin)?;
                if est < pairs.len() || nev >= k.max(2).min(cap) {
                    break (pairs, est.clamp(1, k), Some(est));
                }
                nev = (2 * nev).min(k.max(2)).min(cap);
            }
        }
    };
    let emb = embed(&pairs, r0)?;
    let (partition, log_likelihood, cost) = cluster_embedding(&emb, k, opts, seed)?;
    let diagnostics = Diagnostics {
        eigenvalues: pairs.values.iter().map(|v| [v.re, v.im]).collect(),
        residuals: pairs.residuals.clone(),
        left_residuals: pairs.left_residuals.clone(),
        r0,
        r0_estimate,
        method: opts.method,
        embedding_columns: emb.columns,
        log_likelihood,
        cost,
    };
    Ok((partition, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_basics() {
        let t = [0, 0, 1, 1, 2, 2];
        assert_eq!(adjusted_overlap(&t, &t).unwrap(), 1.0);
        assert_eq!(adjusted_overlap(&t, &[5, 5, 3, 3, 9, 9]).unwrap(), 1.0);
        assert!(adjusted_overlap(&t, &[0, 1]).is_err());
        // Worked example: ARI of {0,0,1,1} vs {0,0,0,1} is 0.
        let v = adjusted_overlap(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn r0_rule() {
        let v = |xs: &[f64]| xs.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        assert_eq!(estimate_r0(&v(&[3.0, 2.0, 1.7, 1.6]), 0.1).unwrap(), 2);
        assert_eq!(estimate_r0(&v(&[4.0, 1.0, 1.8]), 0.1).unwrap(), 1);
        assert_eq!(estimate_r0(&v(&[1.2, 1.2, 1.2]), 0.1).unwrap(), 0);
        assert_eq!(estimate_r0(&v(&[2.0, 2.0, 2.0]), 0.1).unwrap(), 3);
        assert!(estimate_r0(&[], 0.1).is_err());
    }

    #[test]
    fn complex_pair_contributes_two_columns() {
        let n = 4;
        let u = Array2::from_shape_fn((n, 3), |(x, c)| C64::new(x as f64 + 1.0, if c == 0 { 0.0 } else { (x as f64) * if c == 1 { 1.0 } else { -1.0 } }));
        let pairs = EigenPairs {
            values: vec![C64::new(3.0, 0.0), C64::new(1.0, 1.0), C64::new(1.0, -1.0)],
            right: u.clone(),
            left: u,
            residuals: vec![0.0; 3],
            left_residuals: vec![0.0; 3],
        };
        let emb = embed(&pairs, 3).unwrap();
        assert_eq!(emb.points.ncols(), 6);
        assert_eq!(emb.points[[2, 1]], 3.0);
        assert_eq!(emb.points[[2, 2]], 2.0);
        assert_eq!(embed(&pairs, 2).unwrap().points.ncols(), 6);
        assert!(embed(&pairs, 4).is_err());
    }
}
