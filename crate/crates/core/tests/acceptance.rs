//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- 3 5` runs a subset.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::Check;
use dispectral::cluster::{adjusted_overlap, cluster_embedding, embed, ClusterOptions, Method};
use dispectral::eigen::{dense_eigen_oracle, dense_eigenvalues, top_eigenpairs, SolverConfig};
use dispectral::gw::check_all;
use dispectral::harness::{run_experiment, run_overlap_validation, summarize_csv, ExperimentConfig, OverlapRow};
use dispectral::model::{pathwise_f, sample, two_block_spec, DenseModel, ModelSpec, SbmModel};
use dispectral::rng::rng_from_seed;
use dispectral::theory::{
    calibrate_s, eta_threshold, expected_spectrum, gamma_functional, limit_moments, neumann_gamma, tridiag_toeplitz_eigen,
    two_block_report, GammaVector, Side,
};
use dispectral::{SparseMatrix, C64};
use ndarray::{array, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn criterion_1() -> Check {
    let e10 = eta_threshold(10.0).map_err(|e| e.to_string())?;
    let e50 = eta_threshold(50.0).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    if !(0.9790..=0.9800).contains(&e10) {
        problems.push(format!("eta(10) = {e10:.5}"));
    }
    if !(0.880..=0.890).contains(&e50) {
        problems.push(format!("eta(50) = {e50:.5}"));
    }
    let table = [(2, [3.2, 4.8, 6.4]), (4, [5.5, 8.3, 11.1]), (6, [8.1, 12.2, 16.3])];
    let mut worst: f64 = 0.0;
    for (k, row) in table {
        for (d, printed) in [2.0, 3.0, 4.0].into_iter().zip(row) {
            let s = calibrate_s(k, d);
            worst = worst.max((s - printed).abs());
            if (s - printed).abs() > 0.05 {
                problems.push(format!("s({k}, {d}) = {s:.4} vs table {printed}"));
            }
        }
    }
    let summary = format!("eta(10) = {e10:.5}, eta(50) = {e50:.5}, max table deviation {worst:.4}");
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", problems.join("; ")))
    }
}

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

fn criterion_2() -> Check {
    let (mut tested, mut seed) = (0, 10_000u64);
    let (mut worst_value, mut worst_align): (f64, f64) = (0.0, 1.0);
    while tested < 50 {
        seed += 1;
        let n = 20 + (seed as usize * 53) % 181;
        let a = random_sparse(n, seed);
        let dense = a.to_dense();
        let m: Vec<f64> = dense_eigenvalues(&dense).map_err(|e| e.to_string())?.iter().map(|v| v.norm()).collect();
        if m[2] - m[3] <= 0.05 * m[0] {
            continue;
        }
        tested += 1;
        let oracle = dense_eigen_oracle(&dense).map_err(|e| e.to_string())?;
        let got = top_eigenpairs(&a, 3, &SolverConfig::with_seed(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        for i in 0..3 {
            worst_value = worst_value.max((got.values[i] - oracle.values[i]).norm() / m[0]);
            worst_align = worst_align
                .min(alignment(got.right.column(i), oracle.right.column(i)))
                .min(alignment(got.left.column(i), oracle.left.column(i)));
        }
    }
    let summary = format!("50 matrices, max rel. eigenvalue error {worst_value:.2e}, min alignment 1 - {:.2e}", 1.0 - worst_align);
    if worst_value < 1e-8 && worst_align > 1.0 - 1e-8 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_3() -> Check {
    let n = 500;
    let mut worst: f64 = 0.0;
    for eta in [0.9, 0.99] {
        let m = two_block_spec(10.0, eta, n).map_err(|e| e.to_string())?;
        let spec = ModelSpec::from(m.clone());
        let es = expected_spectrum(&spec).map_err(|e| e.to_string())?;
        let block = es.block.as_ref().ok_or("no block vectors")?;
        let k = ModelSpec::from(DenseModel::unweighted(spec.q_dense()).map_err(|e| e.to_string())?).k_dense();
        let rho = dense_eigenvalues(&k).map_err(|e| e.to_string())?[0].norm();
        for i in 0..es.r0 {
            let z = C64::new(es.mu[i].norm_sqr(), 0.0);
            for (side, bv, nodes, kernel) in
                [(Side::Right, &block.f, &es.phi, k.clone()), (Side::Left, &block.g, &es.xi, k.t().to_owned())]
            {
                let h: Vec<C64> = bv.column(i).iter().map(|x| C64::new(x.norm_sqr() / n as f64, 0.0)).collect();
                let closed = gamma_functional(&spec, z, &GammaVector::Block(h), side).map_err(|e| e.to_string())?;
                let squares: Vec<C64> = nodes.column(i).iter().map(|x| C64::new(x.norm_sqr(), 0.0)).collect();
                let oracle = neumann_gamma(&kernel, rho, z, &squares);
                worst = worst.max((closed - oracle).norm() / oracle.norm());
            }
        }
    }
    let summary = format!("max rel. difference {worst:.2e} over eta in {{0.9, 0.99}}, both sides");
    if worst < 1e-8 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_4() -> Check {
    let mut rng = rng_from_seed(44);
    let (mut worst_value, mut worst_bio, mut worst_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for r in 2..=12 {
        for _ in 0..20 {
            let s = rng.random_range(1.0..50.0);
            let eta = rng.random_range(0.5..0.95);
            let t = tridiag_toeplitz_eigen(r, s, eta).map_err(|e| e.to_string())?;
            let f = pathwise_f(r, s, eta);
            let oracle = dense_eigenvalues(&f).map_err(|e| e.to_string())?;
            let mut dense: Vec<f64> = oracle.iter().map(|v| v.re).collect();
            dense.sort_by(|a, b| b.total_cmp(a));
            for i in 0..r {
                worst_value = worst_value.max((t.values[i] - dense[i]).abs().max(oracle[i].im.abs()));
                let fv = f.dot(&t.right.column(i));
                let gv = f.t().dot(&t.left.column(i));
                let res = fv.iter().zip(t.right.column(i)).map(|(a, b)| (a - t.values[i] * b).abs()).fold(0.0, f64::max);
                let lres = gv.iter().zip(t.left.column(i)).map(|(a, b)| (a - t.values[i] * b).abs()).fold(0.0, f64::max);
                worst_res = worst_res.max(res).max(lres);
                for j in 0..r {
                    if i != j {
                        worst_bio = worst_bio.max(t.left.column(i).dot(&t.right.column(j)).abs());
                    }
                }
            }
        }
    }
    let summary = format!(
        "r = 2..12 x 20 draws: max eigenvalue error {worst_value:.2e}, max |<g_i, f_j>| {worst_bio:.2e}, max residual {worst_res:.2e}"
    );
    if worst_value <= 1e-10 && worst_bio <= 1e-10 && worst_res <= 1e-10 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// The two-block overlap runs shared by criteria 5 and 6.
struct TwoBlockRuns {
    rows: Vec<OverlapRow>,
}

const CURVE: [f64; 10] = [0.90, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99];

impl TwoBlockRuns {
    fn compute() -> Result<Self, String> {
        let mut grid = vec![0.6, 0.8];
        grid.extend(CURVE);
        let rows = run_overlap_validation(10.0, &grid, 2000, 20, 2718).map_err(|e| e.to_string())?;
        Ok(TwoBlockRuns { rows })
    }

    fn at(&self, eta: f64) -> Vec<&OverlapRow> {
        self.rows.iter().filter(|r| (r.eta - eta).abs() < 1e-12).collect()
    }

    fn ok_at(&self, eta: f64) -> Vec<&OverlapRow> {
        self.at(eta).into_iter().filter(|r| r.error.is_none()).collect()
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn criterion_5(runs: &TwoBlockRuns) -> Check {
    let rep = two_block_report(10.0, 0.9);
    let ok = runs.ok_at(0.9);
    let lambda1 = mean(ok.iter().map(|r| r.lambda.unwrap()[0].re));
    let bound = 1.15 * rep.vartheta;
    let inside = ok.iter().filter(|r| r.lambda.unwrap()[1].norm() < bound).count();
    let far = runs.ok_at(0.99);
    let nu2 = two_block_report(10.0, 0.99).nu2;
    let lambda2 = mean(far.iter().map(|r| r.lambda.unwrap()[1].norm()));
    let summary = format!(
        "eta 0.9: mean lambda_1 {lambda1:.4} vs {:.4}, |lambda_2| < {bound:.2} in {inside}/20; eta 0.99: mean |lambda_2| {lambda2:.4} vs {nu2:.4} ({} runs)",
        rep.nu1,
        far.len()
    );
    let pass = (lambda1 - rep.nu1).abs() < 0.05 * rep.nu1 && inside >= 18 && (lambda2 - nu2).abs() < 0.1 * nu2 && !far.is_empty();
    if pass {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_6(runs: &TwoBlockRuns) -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for eta in [0.6, 0.8, 0.9] {
        let ok = runs.ok_at(eta);
        let o11 = mean(ok.iter().map(|r| r.overlaps.unwrap()[0][0]));
        let a11 = runs.at(eta)[0].a11.ok_or("no a11 prediction")?;
        pass &= (o11 - a11).abs() < 0.05 && !ok.is_empty();
        parts.push(format!("o11({eta}) {o11:.3} vs {a11:.3}"));
    }
    let o22 = |eta: f64| mean(runs.ok_at(eta).iter().map(|r| r.overlaps.unwrap()[1][1]));
    let noise = mean([0.6, 0.8, 0.9].map(o22));
    let threshold = eta_threshold(10.0).map_err(|e| e.to_string())?;
    let step = 0.01;
    let curve: Vec<(f64, f64)> = [0.6, 0.8].into_iter().chain(CURVE).map(|eta| (eta, o22(eta))).collect();
    let detected: Vec<f64> = curve.iter().filter(|(_, o)| *o > 3.0 * noise).map(|(eta, _)| *eta).collect();
    let early = detected.iter().any(|&eta| eta < threshold - step);
    let missed = curve.iter().any(|&(eta, o)| eta > threshold + step && o <= 3.0 * noise);
    pass &= !early && !missed && !detected.is_empty();
    parts.push(format!(
        "o22 noise {noise:.3}; detected at {:?}; o22 by eta {}",
        detected,
        curve.iter().map(|(e, o)| format!("{e}:{o:.3}")).collect::<Vec<_>>().join(" ")
    ));
    let summary = parts.join("; ");
    if pass {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_7() -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, f) in [("F1", array![[6.0, 4.0], [5.0, 3.0]]), ("F2", array![[48.0, 6.0], [12.0, 24.0]])] {
        let m = SbmModel::with_sizes(f, &[2000, 1000]).map_err(|e| e.to_string())?;
        let lm = limit_moments(&m).map_err(|e| e.to_string())?;
        let reports = check_all(&lm, 12, 100_000, 7).map_err(|e| e.to_string())?;
        let zmax = reports.iter().map(|(_, _, r, _)| r.z_mean.abs().max(r.z_variance.abs())).fold(0.0, f64::max);
        let atom = reports.iter().map(|(_, _, r, _)| r.atom_fraction).fold(f64::INFINITY, f64::min);
        let overflowed: usize = reports.iter().map(|(_, _, _, o)| o).sum();
        pass &= zmax <= 3.0 && overflowed == 0;
        if name == "F1" {
            pass &= atom > 0.0;
        }
        parts.push(format!("{name}: {} (i, j) pairs, max |z| {zmax:.2}, min atom {atom:.4}", reports.len()));
    }
    let summary = parts.join("; ");
    if pass {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sweep: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
    let text = format!(
        "methods = [\"gmm\", \"svd\"]\nruns_per_point = 20\nmaster_seed = 31\n\n[model]\nkind = \"pathwise\"\nr_blocks = 6\nn = 2500\nsweep = {sweep:?}\nd = [2.0]\n\n[outputs]\ncsv = {:?}\nsummary = {:?}\n",
        dir.path().join("sweep.csv").display().to_string(),
        dir.path().join("sweep.json").display().to_string(),
    );
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
    run_experiment(&cfg, false).map_err(|e| e.to_string())?;
    let summary = summarize_csv(&cfg.outputs.csv).map_err(|e| e.to_string())?;
    let mut ahead = 0;
    let mut svd_max: f64 = f64::NEG_INFINITY;
    let mut errors = 0;
    let mut cells = Vec::new();
    for eta in &sweep {
        let point = |m: &str| summary.points.iter().find(|p| p.method == m && p.eta == Some(*eta));
        let (Some(g), Some(s)) = (point("gmm"), point("svd")) else {
            return Err(format!("missing summary at eta {eta}"));
        };
        errors += g.errors + s.errors;
        let (gm, sm) = (g.mean_aov.unwrap_or(f64::NAN), s.mean_aov.unwrap_or(f64::NAN));
        if gm - sm >= 0.05 {
            ahead += 1;
        }
        svd_max = svd_max.max(sm);
        cells.push(format!("{eta:.2}:{gm:.3}/{sm:.3}"));
    }
    let summary = format!(
        "gmm ahead by >= 0.05 at {ahead}/10 points, max svd mean {svd_max:.3}, {errors} failed runs; eta:gmm/svd {}",
        cells.join(" ")
    );
    if ahead >= 3 && svd_max < 0.05 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_9() -> Check {
    let m = two_block_spec(10.0, 0.99, 2000).map_err(|e| e.to_string())?;
    let truth = m.sigma_left().to_vec();
    let spec = ModelSpec::from(m);
    let (mut gmm, mut km) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        let a = sample(&spec, 9000 + seed).map_err(|e| e.to_string())?;
        let pairs = top_eigenpairs(&a, 2, &SolverConfig::with_seed(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        let emb = embed(&pairs, 2).map_err(|e| e.to_string())?;
        for (method, out) in [(Method::Gmm, &mut gmm), (Method::Kmeans, &mut km)] {
            let opts = ClusterOptions { method, ..Default::default() };
            let (p, _, _) = cluster_embedding(&emb, 2, &opts, seed).map_err(|e| e.to_string())?;
            out.push(adjusted_overlap(&truth, &p.labels).map_err(|e| e.to_string())?);
        }
    }
    let (g, k) = (mean(gmm.iter().copied()), mean(km.iter().copied()));
    let wins = gmm.iter().zip(&km).filter(|(a, b)| a > b).count();
    let summary = format!("mean aov gmm {g:.4} vs k-means {k:.4}; gmm higher in {wins}/20 runs");
    if g > k {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let checks: [(&str, Box<dyn Fn() -> Check>); 7] = [
        ("dense sampler", Box::new(common::dense_sampler_unbiased)),
        ("block sampler", Box::new(common::sbm_block_counts_chi_square)),
        ("EM", Box::new(common::em_monotone)),
        ("ARI", Box::new(common::ari_axioms)),
        ("determinism", Box::new(|| common::experiment_determinism(dir.path()))),
        ("resume", Box::new(|| common::crash_resume(dir.path()))),
        ("block-model oracle", Box::new(block_model_oracle)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, check) in checks {
        match check() {
            Ok(s) => parts.push(format!("{name}: {s}")),
            Err(s) => {
                pass = false;
                parts.push(format!("{name} FAILED: {s}"));
            }
        }
    }
    let summary = parts.join("; ");
    if pass {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// Q of a block model equals its lift entrywise.
fn block_model_oracle() -> Check {
    let f = array![[9.0, 2.0, 0.5], [1.0, 6.0, 3.0], [0.2, 1.5, 7.0]];
    let m = SbmModel::with_sizes(f.clone(), &[10, 15, 20]).map_err(|e| e.to_string())?;
    let q = ModelSpec::from(m.clone()).q_dense();
    let lift = Array2::from_shape_fn((45, 45), |(x, y)| f[[m.sigma_left()[x], m.sigma_right()[y]]] / 45.0);
    if q != lift {
        return Err("Q differs from the lifted connectivity".into());
    }
    Ok("Q matches the lift on n = 45".into())
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut two_block: Option<Result<TwoBlockRuns, String>> = None;
    let mut failures = 0;
    for k in 1..=10 {
        if !selected(k) {
            continue;
        }
        let start = Instant::now();
        let result = match k {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 | 6 => match two_block.get_or_insert_with(TwoBlockRuns::compute) {
                Ok(runs) if k == 5 => criterion_5(runs),
                Ok(runs) => criterion_6(runs),
                Err(e) => Err(e.clone()),
            },
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS #{k} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL #{k} ({secs:.1} s): {detail}");
            }
        }
    }
    if failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
