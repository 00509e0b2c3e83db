//! Comparison methods: k-means on the top singular vectors, and SimpleHerm,
//! k-means on the bottom eigenvector of a normalised Hermitian Laplacian
//! built from `omega A + conj(omega) A^T`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::cluster::{kmeans_fit, Partition};
use crate::eigen::{hermitian_extreme, top_svd, SolverConfig, Which};
use crate::error::{invalid, Result};
use crate::sparse::{SparseMatrix, C64};

pub const DEFAULT_RESTARTS: usize = 10;

/// `n x 2k` embedding: left singular vectors then right singular vectors.
pub fn svd_embedding(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<Array2<f64>> {
    let svd = top_svd(a, k, cfg)?;
    let n = a.n_rows();
    Ok(Array2::from_shape_fn((n, 2 * k), |(x, c)| if c < k { svd.left[[x, c]] } else { svd.right[[x, c - k]] }))
}

pub fn svd_cluster(a: &SparseMatrix, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    if !a.is_square() {
        return invalid("adjacency matrix must be square");
    }
    let emb = svd_embedding(a, k, &SolverConfig::with_seed(seed))?;
    Ok(kmeans_fit(emb.view(), k, restarts, seed)?.partition)
}

/// `ceil(2 pi k)`.
pub fn omega_order(k: usize) -> usize {
    (2.0 * PI * k as f64).ceil() as usize
}

/// `H = omega A + conj(omega) A^T` with `omega = exp(2 pi i / order)`.
pub fn hermitian_adjacency(a: &SparseMatrix, order: usize) -> SparseMatrix<C64> {
    let omega = C64::from_polar(1.0, 2.0 * PI / order as f64);
    let mut t: Vec<(usize, usize, C64)> = Vec::with_capacity(2 * a.nnz());
    for (x, y, w) in a.iter() {
        t.push((x, y, omega * w));
        t.push((y, x, omega.conj() * w));
    }
    SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), &t).expect("indices come from a valid matrix")
}

/// `L = I - D^-1/2 H D^-1/2` with `D` the total (out plus in) degree;
/// isolated nodes get a zero in `D^-1/2`.
pub fn hermitian_laplacian(a: &SparseMatrix, order: usize) -> SparseMatrix<C64> {
    let n = a.n_rows();
    let mut deg = a.abs_row_sums();
    for (_, y, w) in a.iter() {
        deg[y] += w.abs();
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let h = hermitian_adjacency(a, order);
    let mut t: Vec<(usize, usize, C64)> = h.iter().map(|(x, y, v)| (x, y, -v * (inv_sqrt[x] * inv_sqrt[y]))).collect();
    t.extend((0..n).map(|x| (x, x, C64::new(1.0, 0.0))));
    SparseMatrix::from_triplets(n, n, &t).expect("indices come from a valid matrix")
}

#[derive(Clone, Debug)]
pub struct HermitianEmbedding {
    /// `n x 2`: real and imaginary parts of the bottom eigenvector.
    pub points: Array2<f64>,
    pub eigenvalue: f64,
    pub omega_order: usize,
}

pub fn simpleherm_embedding(a: &SparseMatrix, k: usize, cfg: &SolverConfig) -> Result<HermitianEmbedding> {
    if !a.is_square() {
        return invalid("adjacency matrix must be square");
    }
    let order = omega_order(k);
    let l = hermitian_laplacian(a, order);
    let pairs = hermitian_extreme(&l, Which::Smallest, 1, cfg)?;
    let n = a.n_rows();
    let points = Array2::from_shape_fn((n, 2), |(x, c)| {
        let z = pairs.right[[x, 0]];
        if c == 0 {
            z.re
        } else {
            z.im
        }
    });
    Ok(HermitianEmbedding { points, eigenvalue: pairs.values[0].re, omega_order: order })
}

/// SimpleHerm. With `normalize_rows` each 2-D point is scaled to unit length
/// (zero rows stay zero) before k-means.
pub fn simpleherm_cluster(a: &SparseMatrix, k: usize, restarts: usize, normalize_rows: bool, seed: u64) -> Result<Partition> {
    let mut emb = simpleherm_embedding(a, k, &SolverConfig::with_seed(seed))?;
    if normalize_rows {
        for mut row in emb.points.rows_mut() {
            let nrm = row.dot(&row).sqrt();
            if nrm > 0.0 {
                row /= nrm;
            }
        }
    }
    Ok(kmeans_fit(emb.points.view(), k, restarts, seed)?.partition)
}
