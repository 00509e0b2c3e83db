//! Sparse eigensolver against the dense QR oracle.

use dispectral::eigen::{
    dense_eigen_oracle, dense_eigenvalues, dense_hermitian_oracle, hermitian_extreme, top_eigenpairs, top_svd, SolverConfig, Which,
};
use dispectral::rng::rng_from_seed;
use dispectral::{SparseMatrix, C64};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_sparse(n: usize, seed: u64) -> SparseMatrix {
    let mut rng = rng_from_seed(seed);
    let p = 5.0 / n as f64;
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < p {
                let w: f64 = StandardNormal.sample(&mut rng);
                t.push((i, j, w));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

fn alignment(a: ndarray::ArrayView1<C64>, b: ndarray::ArrayView1<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

#[test]
fn top_three_match_dense_oracle_on_gapped_matrices() {
    let mut tested = 0;
    let mut seed = 0;
    while tested < 50 {
        seed += 1;
        let n = 20 + (seed as usize * 37) % 181;
        let a = random_sparse(n, seed);
        let m: Vec<f64> = dense_eigenvalues(&a.to_dense()).unwrap().iter().map(|v| v.norm()).collect();
        if m[2] - m[3] <= 0.05 * m[0] {
            continue;
        }
        let oracle = dense_eigen_oracle(&a.to_dense()).unwrap();
        tested += 1;
        let got = top_eigenpairs(&a, 3, &SolverConfig::with_seed(seed)).unwrap();
        for i in 0..3 {
            let rel = (got.values[i] - oracle.values[i]).norm() / m[0];
            assert!(rel < 1e-8, "seed {seed} n {n} value {i}: rel {rel}");
            let ar = alignment(got.right.column(i), oracle.right.column(i));
            let al = alignment(got.left.column(i), oracle.left.column(i));
            assert!(ar > 1.0 - 1e-8 && al > 1.0 - 1e-8, "seed {seed}: alignments {ar} {al}");
            assert!(got.residuals[i] <= 1e-10 * m[0]);
            assert!(got.left_residuals[i] <= 1e-10 * m[0]);
        }
    }
}

#[test]
fn solver_output_is_bitwise_deterministic() {
    let a = random_sparse(150, 77);
    let cfg = SolverConfig::with_seed(5);
    let x = top_eigenpairs(&a, 4, &cfg).unwrap();
    let y = top_eigenpairs(&a, 4, &cfg).unwrap();
    assert_eq!(x.values, y.values);
    assert_eq!(x.right, y.right);
    assert_eq!(x.left, y.left);
}

#[test]
fn values_are_conjugate_closed_and_sorted() {
    for seed in 0..10 {
        let a = random_sparse(120, 1000 + seed);
        let e = top_eigenpairs(&a, 5, &SolverConfig::with_seed(seed)).unwrap();
        let m = e.moduli();
        assert!(m.windows(2).all(|w| w[0] >= w[1]));
        for v in &e.values {
            if v.im != 0.0 {
                assert!(e.values.contains(&v.conj()), "seed {seed}: {v} lacks partner");
            }
        }
        for c in 0..e.len() {
            let col = e.right.column(c);
            let top = col.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let lead = col.iter().find(|x| x.norm() >= top * (1.0 - 1e-10)).unwrap();
            assert_eq!(lead.im, 0.0);
            assert!(lead.re > 0.0);
        }
    }
}

#[test]
fn svd_matches_gram_oracle() {
    let a = random_sparse(100, 4242);
    let s = top_svd(&a, 4, &SolverConfig::with_seed(3)).unwrap();
    let d = a.to_dense();
    let gram = d.t().dot(&d);
    let oracle = dense_eigen_oracle(&gram).unwrap();
    for i in 0..4 {
        let want = oracle.values[i].re.sqrt();
        assert!((s.singular_values[i] - want).abs() / want < 1e-8);
    }
    let vtv = s.right.t().dot(&s.right);
    let utu = s.left.t().dot(&s.left);
    assert!((&vtv - &Array2::<f64>::eye(4)).iter().all(|x| x.abs() < 1e-8));
    assert!((&utu - &Array2::<f64>::eye(4)).iter().all(|x| x.abs() < 1e-8));
}

#[test]
fn hermitian_laplacian_matches_dense_oracle() {
    let n = 300;
    let mut rng = rng_from_seed(99);
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 13.0);
    let mut t = Vec::new();
    let mut deg = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            let same = (x < n / 2) == (y < n / 2);
            let p = if same { 6.0 } else { 3.0 } / n as f64;
            if x != y && rng.random::<f64>() < p {
                t.push((x, y, omega));
                t.push((y, x, omega.conj()));
                deg[x] += 1.0;
                deg[y] += 1.0;
            }
        }
    }
    let h = SparseMatrix::from_triplets(n, n, &t).unwrap();
    let mut lt: Vec<(usize, usize, C64)> = h
        .iter()
        .map(|(i, j, v)| {
            let s = 1.0 / (deg[i] as f64 * deg[j] as f64).sqrt();
            (i, j, -v * s)
        })
        .collect();
    for (i, d) in deg.iter().enumerate() {
        if *d > 0.0 {
            lt.push((i, i, C64::new(1.0, 0.0)));
        }
    }
    let l = SparseMatrix::from_triplets(n, n, &lt).unwrap();
    let got = hermitian_extreme(&l, Which::Smallest, 2, &SolverConfig::with_seed(1)).unwrap();
    let (vals, _) = dense_hermitian_oracle(&l.to_dense()).unwrap();
    for i in 0..2 {
        assert!((got.values[i].re - vals[i]).abs() <= 1e-8 * vals[n - 1].abs().max(1.0));
    }
    let big = hermitian_extreme(&l, Which::Largest, 1, &SolverConfig::with_seed(1)).unwrap();
    assert!((big.values[0].re - vals[n - 1]).abs() / vals[n - 1] < 1e-8);
}
