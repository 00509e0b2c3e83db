//! Random directed graph models: the weighted inhomogeneous Erdős–Rényi model
//! given by dense `(P, W)` matrices, and the directed stochastic block model
//! given by a connectivity matrix `F` and left/right memberships.

use ndarray::Array2;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::sparse::SparseMatrix;

/// Edge `(x, y)` is present with probability `P[x, y]` and then carries
/// weight `W[x, y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseModel {
    p: Array2<f64>,
    w: Array2<f64>,
}

impl DenseModel {
    pub fn new(p: Array2<f64>, w: Array2<f64>) -> Result<Self> {
        if !p.is_square() || p.dim() != w.dim() {
            return invalid(format!("P is {:?} and W is {:?}; both must be the same square shape", p.dim(), w.dim()));
        }
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return invalid(format!("probability {bad} outside [0, 1]"));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return invalid("weights must be finite");
        }
        Ok(Self { p, w })
    }

    /// All weights equal to one.
    pub fn unweighted(p: Array2<f64>) -> Result<Self> {
        let w = Array2::ones(p.raw_dim());
        Self::new(p, w)
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }
}

/// Directed SBM: edge `(x, y)` is present with probability
/// `F[sigma_left(x), sigma_right(y)] / n`, with unit weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmModel {
    f: Array2<f64>,
    sigma_left: Vec<usize>,
    sigma_right: Vec<usize>,
}

impl SbmModel {
    pub fn new(f: Array2<f64>, sigma_left: Vec<usize>, sigma_right: Vec<usize>) -> Result<Self> {
        let r = f.nrows();
        if !f.is_square() || r == 0 {
            return invalid(format!("F must be a non-empty square matrix, got {:?}", f.dim()));
        }
        let n = sigma_left.len();
        if n == 0 || sigma_right.len() != n {
            return invalid(format!(
                "membership lengths {} and {} must be equal and positive",
                sigma_left.len(),
                sigma_right.len()
            ));
        }
        if let Some(bad) = f.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return invalid(format!("F entry {bad} must be finite and nonnegative"));
        }
        let fmax = f.iter().copied().fold(0.0, f64::max);
        if fmax / n as f64 > 1.0 {
            return invalid(format!("max(F)/n = {} exceeds 1", fmax / n as f64));
        }
        if let Some(bad) = sigma_left.iter().chain(&sigma_right).find(|&&c| c >= r) {
            return invalid(format!("cluster label {bad} out of range for r = {r}"));
        }
        Ok(Self { f, sigma_left, sigma_right })
    }

    /// Contiguous clusters of the given sizes, identical on both sides.
    pub fn with_sizes(f: Array2<f64>, sizes: &[usize]) -> Result<Self> {
        if sizes.len() != f.nrows() {
            return invalid(format!("{} cluster sizes for r = {}", sizes.len(), f.nrows()));
        }
        let sigma: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m)).collect();
        Self::new(f, sigma.clone(), sigma)
    }

    /// Contiguous clusters of near-equal size; when `r` does not divide `n`
    /// the first `n mod r` clusters get one extra node.
    pub fn balanced(f: Array2<f64>, n: usize) -> Result<Self> {
        let r = f.nrows();
        if r == 0 || n < r {
            return invalid(format!("need at least one node per cluster (n = {n}, r = {r})"));
        }
        let sizes: Vec<usize> = (0..r).map(|c| n / r + usize::from(c < n % r)).collect();
        Self::with_sizes(f, &sizes)
    }

    pub fn n(&self) -> usize {
        self.sigma_left.len()
    }

    pub fn r(&self) -> usize {
        self.f.nrows()
    }

    pub fn f(&self) -> &Array2<f64> {
        &self.f
    }

    pub fn sigma_left(&self) -> &[usize] {
        &self.sigma_left
    }

    pub fn sigma_right(&self) -> &[usize] {
        &self.sigma_right
    }

    pub fn same_memberships(&self) -> bool {
        self.sigma_left == self.sigma_right
    }

    fn members(sigma: &[usize], r: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); r];
        for (x, &c) in sigma.iter().enumerate() {
            out[c].push(x);
        }
        out
    }
}

/// Cluster sizes from proportions by largest remainders, summing to `n`.
pub fn sizes_from_proportions(n: usize, proportions: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = proportions.iter().sum();
    if proportions.is_empty() || proportions.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return invalid(format!("proportions {proportions:?} must be nonnegative and sum to 1"));
    }
    let raw: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = n - sizes.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Dense(DenseModel),
    Sbm(SbmModel),
}

impl From<DenseModel> for ModelSpec {
    fn from(m: DenseModel) -> Self {
        ModelSpec::Dense(m)
    }
}

impl From<SbmModel> for ModelSpec {
    fn from(m: SbmModel) -> Self {
        ModelSpec::Sbm(m)
    }
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match self {
            ModelSpec::Dense(d) => d.n(),
            ModelSpec::Sbm(s) => s.n(),
        }
    }

    pub fn edge_probability(&self, x: usize, y: usize) -> f64 {
        match self {
            ModelSpec::Dense(d) => d.p[[x, y]],
            ModelSpec::Sbm(s) => s.f[[s.sigma_left[x], s.sigma_right[y]]] / s.n() as f64,
        }
    }

    /// `Q[x, y] = P[x, y] W[x, y]`, the expected adjacency matrix.
    pub fn q(&self, x: usize, y: usize) -> f64 {
        match self {
            ModelSpec::Dense(d) => d.p[[x, y]] * d.w[[x, y]],
            ModelSpec::Sbm(_) => self.edge_probability(x, y),
        }
    }

    /// `K[x, y] = P[x, y] W[x, y]^2`, the expected entrywise square.
    pub fn k(&self, x: usize, y: usize) -> f64 {
        match self {
            ModelSpec::Dense(d) => d.p[[x, y]] * d.w[[x, y]] * d.w[[x, y]],
            ModelSpec::Sbm(_) => self.edge_probability(x, y),
        }
    }

    pub fn q_dense(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(x, y)| self.q(x, y))
    }

    pub fn k_dense(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(x, y)| self.k(x, y))
    }

    /// Largest weight modulus over entries with positive probability.
    pub fn max_weight(&self) -> f64 {
        match self {
            ModelSpec::Dense(d) => d
                .p
                .iter()
                .zip(d.w.iter())
                .filter(|(p, _)| **p > 0.0)
                .map(|(_, w)| w.abs())
                .fold(0.0, f64::max),
            ModelSpec::Sbm(s) => {
                if s.f.iter().any(|x| *x > 0.0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `sum_{x,y} P[x, y]`.
    pub fn expected_edges(&self) -> f64 {
        match self {
            ModelSpec::Dense(d) => d.p.sum(),
            ModelSpec::Sbm(s) => {
                let sm = sbm_summary(s);
                let n = s.n() as f64;
                let mut total = 0.0;
                for a in 0..s.r() {
                    for b in 0..s.r() {
                        total += sm.p[a] * sm.q[b] * n * s.f[[a, b]];
                    }
                }
                total
            }
        }
    }
}

/// Cluster proportions and the cluster intersection matrix of an SBM.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmSummary {
    /// Left (source) cluster proportions.
    pub p: Vec<f64>,
    /// Right (target) cluster proportions.
    pub q: Vec<f64>,
    /// `Pi[i, j] = |{x : sigma_left(x) = j, sigma_right(x) = i}| / n`.
    pub pi: Array2<f64>,
    /// `F Pi`.
    pub modularity: Array2<f64>,
}

pub fn sbm_summary(m: &SbmModel) -> SbmSummary {
    let r = m.r();
    let n = m.n() as f64;
    let mut p = vec![0.0; r];
    let mut q = vec![0.0; r];
    let mut pi = Array2::zeros((r, r));
    for (&g, &d) in m.sigma_left.iter().zip(&m.sigma_right) {
        p[g] += 1.0 / n;
        q[d] += 1.0 / n;
        pi[[d, g]] += 1.0 / n;
    }
    let modularity = m.f.dot(&pi);
    SbmSummary { p, q, pi, modularity }
}

/// Tridiagonal Toeplitz connectivity with `s/2` on the diagonal, `s eta`
/// above and `s (1 - eta)` below.
pub fn pathwise_f(r_blocks: usize, s: f64, eta: f64) -> Array2<f64> {
    Array2::from_shape_fn((r_blocks, r_blocks), |(i, j)| {
        if i == j {
            s / 2.0
        } else if j == i + 1 {
            s * eta
        } else if i == j + 1 {
            s * (1.0 - eta)
        } else {
            0.0
        }
    })
}

/// Pathwise SBM with `r_blocks` equal contiguous clusters.
pub fn pathwise_spec(r_blocks: usize, s: f64, eta: f64, n: usize) -> Result<SbmModel> {
    if r_blocks == 0 {
        return invalid("r_blocks must be positive");
    }
    if !(s > 0.0) {
        return invalid(format!("s = {s} must be positive"));
    }
    if !(0.5..=1.0).contains(&eta) {
        return invalid(format!("eta = {eta} must lie in [1/2, 1]"));
    }
    SbmModel::balanced(pathwise_f(r_blocks, s, eta), n)
}

/// The two-block model is the pathwise model with two clusters.
pub fn two_block_spec(s: f64, eta: f64, n: usize) -> Result<SbmModel> {
    pathwise_spec(2, s, eta, n)
}

/// Draws one adjacency matrix. Self-loops are allowed.
pub fn sample(spec: &ModelSpec, seed: u64) -> Result<SparseMatrix> {
    let mut rng = rng_from_seed(seed);
    let n = spec.n();
    let mut triplets = Vec::new();
    match spec {
        ModelSpec::Dense(d) => {
            for x in 0..n {
                for y in 0..n {
                    let p = d.p[[x, y]];
                    if p > 0.0 && rng.random::<f64>() < p {
                        triplets.push((x, y, d.w[[x, y]]));
                    }
                }
            }
        }
        ModelSpec::Sbm(s) => {
            let left = SbmModel::members(&s.sigma_left, s.r());
            let right = SbmModel::members(&s.sigma_right, s.r());
            for a in 0..s.r() {
                for b in 0..s.r() {
                    let cells = (left[a].len() * right[b].len()) as u64;
                    let p = s.f[[a, b]] / n as f64;
                    if cells == 0 || p <= 0.0 {
                        continue;
                    }
                    let count = if p >= 1.0 {
                        cells
                    } else {
                        Binomial::new(cells, p).map_err(|e| Error::Validation(e.to_string()))?.sample(&mut rng)
                    };
                    let width = right[b].len();
                    for pos in index::sample(&mut rng, cells as usize, count as usize) {
                        triplets.push((left[a][pos / width], right[b][pos % width], 1.0));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pathwise_matrices() {
        let f = pathwise_f(3, 6.0, 0.8);
        let want = array![[3.0, 4.8, 0.0], [1.2, 3.0, 4.8], [0.0, 1.2, 3.0]];
        assert!((&f - &want).iter().all(|x| x.abs() < 1e-12));
        let two = pathwise_f(2, 10.0, 0.9);
        assert!((&two - &array![[5.0, 9.0], [1.0, 5.0]]).iter().all(|x| x.abs() < 1e-12));
        assert!(pathwise_spec(3, 6.0, 0.8, 2).is_err());
        let uneven = pathwise_spec(6, 6.0, 0.8, 2500).unwrap();
        assert_eq!(uneven.sigma_left().iter().filter(|&&c| c == 0).count(), 417);
        assert_eq!(uneven.sigma_left().iter().filter(|&&c| c == 5).count(), 416);
        assert!(pathwise_spec(2, 6.0, 0.4, 10).is_err());
    }

    #[test]
    fn summary_of_balanced_model() {
        let m = pathwise_spec(2, 10.0, 0.9, 10).unwrap();
        let s = sbm_summary(&m);
        assert_eq!(s.pi, array![[0.5, 0.0], [0.0, 0.5]]);
        assert!((&s.modularity - &(m.f() / 2.0)).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn summary_with_unequal_sizes() {
        let m = SbmModel::with_sizes(array![[6.0, 4.0], [5.0, 3.0]], &[20, 10]).unwrap();
        let s = sbm_summary(&m);
        let want = array![[4.0, 4.0 / 3.0], [10.0 / 3.0, 1.0]];
        assert!((&s.modularity - &want).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn summary_with_relabelled_right_side() {
        let left = vec![0, 0, 1, 1, 2, 2];
        let right = vec![1, 2, 2, 0, 0, 1];
        let m = SbmModel::new(Array2::ones((3, 3)), left.clone(), right.clone()).unwrap();
        let s = sbm_summary(&m);
        for i in 0..3 {
            for j in 0..3 {
                let count = left.iter().zip(&right).filter(|(g, d)| **g == j && **d == i).count();
                assert!((s.pi[[i, j]] - count as f64 / 6.0).abs() < 1e-15);
            }
            let row: f64 = s.pi.row(i).sum();
            assert!((row - s.q[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let empty = ModelSpec::from(DenseModel::unweighted(Array2::zeros((4, 4))).unwrap());
        assert_eq!(sample(&empty, 1).unwrap().nnz(), 0);
        let w = Array2::from_shape_fn((3, 3), |(x, y)| (x + y) as f64);
        let full = ModelSpec::from(DenseModel::new(Array2::ones((3, 3)), w.clone()).unwrap());
        let a = sample(&full, 1).unwrap();
        assert_eq!(a.to_dense(), w);
        assert!(DenseModel::unweighted(array![[1.5]]).is_err());
    }

    #[test]
    fn sizes_round_to_n() {
        assert_eq!(sizes_from_proportions(10, &[2.0 / 3.0, 1.0 / 3.0]).unwrap(), vec![7, 3]);
        assert_eq!(sizes_from_proportions(5000, &[2.0 / 3.0, 1.0 / 3.0]).unwrap().iter().sum::<usize>(), 5000);
    }
}
