//! Compressed sparse row matrices.

use std::ops::{Add, Mul};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type C64 = Complex64;

/// Scalar types a [`SparseMatrix`] can hold.
pub trait Scalar: Copy + PartialEq + Add<Output = Self> + Mul<Output = Self> + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn to_c64(self) -> C64;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// An immutable `n_rows x n_cols` matrix in CSR layout.
///
/// Column indices are strictly increasing inside every row and no explicit
/// zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T: Scalar = f64> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and entries that end up zero are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return invalid(format!("entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == j {
                    acc = acc + row[k].1;
                    k += 1;
                }
                if acc != T::zero() {
                    col_idx.push(j);
                    values.push(acc);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Assembles a matrix from already sorted, duplicate-free rows.
    pub(crate) fn from_sorted_rows(n_cols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                debug_assert!(col_idx.len() == *row_ptr.last().unwrap() || *col_idx.last().unwrap() < j);
                if v != T::zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn from_dense(a: &Array2<T>) -> Self {
        let rows = a
            .outer_iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(j, v)| (j, *v)).collect())
            .collect();
        Self::from_sorted_rows(a.ncols(), rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Iterates over stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let pos = next[j];
                col_idx[pos] = i;
                values[pos] = x;
                next[j] += 1;
            }
        }
        Self { n_rows: self.n_cols, n_cols: self.n_rows, row_ptr, col_idx, values }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        for v in &mut t.values {
            *v = v.conj();
        }
        t
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        let rows = (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &x)| (j, f(x))).collect()
            })
            .collect();
        SparseMatrix::from_sorted_rows(self.n_cols, rows)
    }

    pub fn to_c64(&self) -> SparseMatrix<C64> {
        self.map(Scalar::to_c64)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut a = Array2::from_elem((self.n_rows, self.n_cols), T::zero());
        for (i, j, v) in self.iter() {
            a[[i, j]] = v;
        }
        a
    }

    /// `y = A x` over complex vectors.
    pub fn mul_vec_c64(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut acc = C64::new(0.0, 0.0);
            for (&j, &a) in c.iter().zip(v) {
                acc += a.to_c64() * x[j];
            }
            *yi = acc;
        }
    }

    /// Row sums of entry moduli.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().map(|v| v.modulus()).sum()).collect()
    }
}

impl SparseMatrix<f64> {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }
}

impl SparseMatrix<C64> {
    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for (i, j, v) in self.iter() {
            worst = worst.max((v - self.get(j, i).conj()).norm());
        }
        worst
    }
}
