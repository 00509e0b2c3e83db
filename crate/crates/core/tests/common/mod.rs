//! Checks shared by the property suites and the acceptance run. Each returns
//! a one-line description on success and the reason on failure.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use dispectral::cluster::{adjusted_overlap, gmm_em, gmm_init, GmmOptions};
use dispectral::harness::{run_experiment, ExperimentConfig};
use dispectral::model::{sample, DenseModel, ModelSpec, SbmModel};
use dispectral::rng::rng_from_seed;
use ndarray::{array, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

pub type Check = std::result::Result<String, String>;

pub const RUNTIME_COLUMN: usize = 14;

/// Presence frequencies of a 4 x 4 dense model over 10^4 draws.
pub fn dense_sampler_unbiased() -> Check {
    let p = array![[0.05, 0.5, 0.9, 0.2], [0.3, 0.7, 0.1, 0.95], [0.6, 0.02, 0.4, 0.8], [0.15, 0.85, 0.55, 0.35]];
    let spec = ModelSpec::from(DenseModel::unweighted(p.clone()).map_err(|e| e.to_string())?);
    let draws = 10_000;
    let mut counts = Array2::<f64>::zeros((4, 4));
    for seed in 0..draws {
        for (x, y, _) in sample(&spec, seed).map_err(|e| e.to_string())?.iter() {
            counts[[x, y]] += 1.0;
        }
    }
    let nf = draws as f64;
    let mut worst: f64 = 0.0;
    for ((x, y), &c) in counts.indexed_iter() {
        let q = p[[x, y]];
        let z = (c / nf - q).abs() / (q * (1.0 - q) / nf).sqrt();
        if z > 4.0 {
            return Err(format!("entry ({x}, {y}): frequency {} vs {q}, {z:.2} sd", c / nf));
        }
        worst = worst.max(z);
    }
    Ok(format!("max deviation {worst:.2} sd over 16 entries"))
}

/// Per-block edge counts of the block sampler against the exact law of
/// independent per-entry Bernoulli draws, pooled into one chi-square test.
pub fn sbm_block_counts_chi_square() -> Check {
    let f = array![[9.0, 2.0, 0.5], [1.0, 6.0, 3.0], [0.2, 1.5, 7.0]];
    let sizes = [20usize, 30, 40];
    let n: usize = sizes.iter().sum();
    let m = SbmModel::with_sizes(f.clone(), &sizes).map_err(|e| e.to_string())?;
    let spec = ModelSpec::from(m.clone());
    let draws = 2000;
    let mut counts = vec![vec![0u64; draws]; 9];
    for seed in 0..draws {
        let a = sample(&spec, seed as u64).map_err(|e| e.to_string())?;
        for (x, y, _) in a.iter() {
            counts[m.sigma_left()[x] * 3 + m.sigma_right()[y]][seed] += 1;
        }
    }
    let mut stat = 0.0;
    let mut df = 0usize;
    for a in 0..3 {
        for b in 0..3 {
            let law = Binomial::new(f[[a, b]] / n as f64, (sizes[a] * sizes[b]) as u64).map_err(|e| e.to_string())?;
            let mut edges: Vec<u64> = [0.2, 0.4, 0.6, 0.8].iter().map(|&q| law.inverse_cdf(q)).collect();
            edges.dedup();
            let mut observed = vec![0.0; edges.len() + 1];
            for &c in &counts[a * 3 + b] {
                observed[edges.iter().position(|&e| c <= e).unwrap_or(edges.len())] += 1.0;
            }
            let mut below = 0.0;
            for (i, o) in observed.iter().enumerate() {
                let upto = if i < edges.len() { law.cdf(edges[i]) } else { 1.0 };
                let expected = (upto - below) * draws as f64;
                below = upto;
                stat += (o - expected).powi(2) / expected;
            }
            df += observed.len() - 1;
        }
    }
    let critical = ChiSquared::new(df as f64).map_err(|e| e.to_string())?.inverse_cdf(0.999);
    if stat > critical {
        return Err(format!("chi-square {stat:.1} > {critical:.1} on {df} df"));
    }
    Ok(format!("chi-square {stat:.1} <= {critical:.1} on {df} df"))
}

/// Three Gaussian clouds in the plane with unequal spreads.
pub fn clouds(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    let centers = [(0.0, 0.0, 1.0), (4.0, 1.0, 0.5), (1.0, 4.0, 1.5)];
    Array2::from_shape_fn((n, 2), |(i, c)| {
        let (cx, cy, sd) = centers[i % 3];
        let z: f64 = StandardNormal.sample(&mut rng);
        (if c == 0 { cx } else { cy }) + sd * z
    })
}

/// EM objective never decreases, from 100 random initialisations.
pub fn em_monotone() -> Check {
    let points = clouds(300, 11);
    let opts = GmmOptions::default();
    let mut steps = 0;
    for seed in 0..100 {
        let init = gmm_init(points.view(), 3, seed, &opts);
        let run = gmm_em(points.view(), init, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        for (t, w) in run.trace.windows(2).enumerate() {
            if w[1] < w[0] - 1e-9 * w[0].abs().max(1.0) {
                return Err(format!("seed {seed} step {t}: {} -> {}", w[0], w[1]));
            }
        }
        steps += run.trace.len() - 1;
    }
    Ok(format!("100 runs, {steps} EM steps, none decreasing"))
}

fn random_labels(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Identity, permutation invariance, symmetry, and mean over independent
/// random partitions.
pub fn ari_axioms() -> Check {
    let mut rng = rng_from_seed(5);
    let ari = |a: &[usize], b: &[usize]| adjusted_overlap(a, b).map_err(|e| e.to_string());
    for _ in 0..20 {
        let a = random_labels(200, 4, &mut rng);
        let b = random_labels(200, 3, &mut rng);
        if (ari(&a, &a)? - 1.0).abs() > 1e-12 {
            return Err("ari(a, a) != 1".into());
        }
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng);
        let relabelled: Vec<usize> = a.iter().map(|&l| perm[l]).collect();
        if (ari(&relabelled, &b)? - ari(&a, &b)?).abs() > 1e-12 {
            return Err("not invariant under relabelling".into());
        }
        if (ari(&a, &b)? - ari(&b, &a)?).abs() > 1e-12 {
            return Err("not symmetric".into());
        }
    }
    let mut total = 0.0;
    for _ in 0..100 {
        let a = random_labels(1000, 3, &mut rng);
        let b = random_labels(1000, 3, &mut rng);
        total += ari(&a, &b)?;
    }
    let mean = total / 100.0;
    if mean.abs() > 0.01 {
        return Err(format!("random partitions average {mean:.4}"));
    }
    Ok(format!("identity, relabelling and symmetry hold; random mean {mean:.5}"))
}

/// Rows of a CSV with the runtime column removed.
pub fn without_runtime(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            if cells.len() > RUNTIME_COLUMN {
                cells.remove(RUNTIME_COLUMN);
            }
            cells.join(",")
        })
        .collect()
}

pub fn experiment_toml(dir: &Path, name: &str, n: usize, sweep: &[f64], runs: usize, methods: &[&str]) -> (PathBuf, PathBuf) {
    let csv = dir.join(format!("{name}.csv"));
    let cfg = dir.join(format!("{name}.toml"));
    let text = format!(
        "methods = {methods:?}\nruns_per_point = {runs}\nmaster_seed = 2024\n\n[model]\nkind = \"pathwise\"\nr_blocks = 3\nn = {n}\nsweep = {sweep:?}\nd = [3.0]\n\n[outputs]\ncsv = {:?}\nsummary = {:?}\n",
        csv.display().to_string(),
        dir.join(format!("{name}.json")).display().to_string(),
    );
    fs::write(&cfg, text).unwrap();
    (cfg, csv)
}

/// Two runs of one configuration agree byte for byte outside `runtime_ms`.
pub fn experiment_determinism(dir: &Path) -> Check {
    let methods = ["gmm", "kmeans", "svd", "simpleherm"];
    let sweep = [0.6, 0.9];
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let (cfg, csv) = experiment_toml(dir, name, 300, &sweep, 3, &methods);
        let mut cfg = ExperimentConfig::load(&cfg).map_err(|e| e.to_string())?;
        cfg.outputs.summary = dir.join(format!("{name}.json"));
        run_experiment(&cfg, false).map_err(|e| e.to_string())?;
        outputs.push(without_runtime(&csv));
    }
    let expected_rows = sweep.len() * methods.len() * 3;
    if outputs[0].len() != expected_rows + 1 {
        return Err(format!("{} rows, expected {expected_rows}", outputs[0].len() - 1));
    }
    if outputs[0] != outputs[1] {
        return Err("outputs differ".into());
    }
    Ok(format!("{expected_rows} rows identical across two runs"))
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).map(|s| s.lines().count()).unwrap_or(0)
}

/// Kills the CLI part-way through a sweep, cuts the file mid-row, resumes,
/// and compares with an uninterrupted run.
pub fn crash_resume(dir: &Path) -> Check {
    let bin = env!("CARGO_BIN_EXE_dispectral");
    let sweep = [0.55, 0.65, 0.75, 0.85, 0.95];
    let methods = ["gmm", "svd"];
    let (full_cfg, full_csv) = experiment_toml(dir, "full", 1200, &sweep, 4, &methods);
    let (cut_cfg, cut_csv) = experiment_toml(dir, "cut", 1200, &sweep, 4, &methods);
    let status = Command::new(bin)
        .args(["--threads", "1", "experiment", "--config"])
        .arg(&full_cfg)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("uninterrupted run exited with {status}"));
    }
    let mut child = Command::new(bin)
        .args(["--threads", "1", "experiment", "--config"])
        .arg(&cut_cfg)
        .stdout(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    while line_count(&cut_csv) < 8 && start.elapsed() < Duration::from_secs(120) {
        if child.try_wait().map_err(|e| e.to_string())?.is_some() {
            break;
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    let killed = child.try_wait().map_err(|e| e.to_string())?.is_none();
    let _ = child.kill();
    let _ = child.wait();
    let text = fs::read_to_string(&cut_csv).map_err(|e| e.to_string())?;
    let rows_at_kill = text.lines().count().saturating_sub(1);
    // A torn write: drop the tail of the last row.
    if rows_at_kill > 0 {
        let cut = text.trim_end().len() - 7;
        fs::write(&cut_csv, &text[..cut]).map_err(|e| e.to_string())?;
    }
    let status = Command::new(bin)
        .args(["--threads", "1", "experiment", "--resume", "--config"])
        .arg(&cut_cfg)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("resumed run exited with {status}"));
    }
    let (full, resumed) = (without_runtime(&full_csv), without_runtime(&cut_csv));
    if full.len() != sweep.len() * methods.len() * 4 + 1 {
        return Err(format!("uninterrupted run has {} rows", full.len() - 1));
    }
    if full != resumed {
        return Err("resumed output differs from the uninterrupted run".into());
    }
    let how = if killed { "killed" } else { "finished" };
    Ok(format!("{how} after {rows_at_kill} rows, resumed output identical ({} rows)", full.len() - 1))
}
