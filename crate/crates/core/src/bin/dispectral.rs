//! Command-line front end. Exit codes: 0 on success, 2 for invalid input,
//! 3 for numerical failures.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dispectral::baselines::{simpleherm_cluster, svd_cluster, DEFAULT_RESTARTS};
use dispectral::cluster::{adjusted_overlap, cluster_digraph, ClusterOptions, Method, R0, DEFAULT_R0_MARGIN};
use dispectral::eigen::{top_eigenvalues, SolverConfig};
use dispectral::gw::{moment_check, simulate_martingale, GwConfig};
use dispectral::harness::{
    run_experiment, run_fluctuation_histograms, run_overlap_validation, summarize_overlaps, write_histogram_csv,
    write_overlap_csv, ExperimentConfig, FluctuationConfig, ModelConfig,
};
use dispectral::io::{fmt_f64, load_edgelist, load_labels, save_edgelist, save_labels};
use dispectral::model::{sample, ModelSpec};
use dispectral::plot::{plot_csv, plot_file, threshold_map_rows, PlotKind};
use dispectral::theory::{expected_spectrum, limit_moments, overlap_from_spectrum};
use dispectral::C64;

#[derive(Parser)]
#[command(name = "dispectral", version, about = "Spectral clustering of sparse directed graphs")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterMethod {
    Gmm,
    Kmeans,
    Svd,
    Simpleherm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    OverlapCurves,
    SpectrumScatter,
    ThresholdMap,
    Histogram,
}

impl From<Kind> for PlotKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::OverlapCurves => PlotKind::OverlapCurves,
            Kind::SpectrumScatter => PlotKind::SpectrumScatter,
            Kind::ThresholdMap => PlotKind::ThresholdMap,
            Kind::Histogram => PlotKind::Histogram,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a graph from a model file and write its edge list.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the planted (left) memberships.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Leading eigenvalues of a graph as `kind,re,im` rows.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Adds the expected outliers and the threshold radius of this model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analytic spectrum and overlap predictions of a model, as JSON.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        /// JSON output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the n-dimensional expected eigenvectors.
        #[arg(long)]
        vectors: bool,
        /// Write the pathwise detection condition for r = 2..=32 as CSV.
        #[arg(long)]
        threshold_map: Option<PathBuf>,
    },
    /// Cluster a graph.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// Number of eigenvector pairs, or `auto`.
        #[arg(long, default_value = "auto")]
        r0: String,
        #[arg(long, value_enum, default_value = "gmm")]
        method: ClusterMethod,
        /// Margin of the r0 rule.
        #[arg(long, default_value_t = DEFAULT_R0_MARGIN)]
        margin: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Scale SimpleHerm's 2-D points to unit length before k-means.
        #[arg(long)]
        normalize_embedding: bool,
        /// Planted labels; the adjusted overlap is printed.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run a sweep from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Continue an interrupted run from its CSV.
        #[arg(long)]
        resume: bool,
    },
    /// Empirical against predicted eigenvector overlaps in the two-block model.
    OverlapValidate {
        #[arg(long, default_value_t = 10.0)]
        s: f64,
        /// Comma-separated eta values.
        #[arg(long, value_delimiter = ',', required = true)]
        eta: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Per-eta means as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Histograms of eigenvector entries against the Gaussian mixture limits.
    Fluctuations {
        /// A custom-f model file (f, proportions, n).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Per-cluster moments as JSON.
        #[arg(long)]
        moments: Option<PathBuf>,
    },
    /// Simulate the Galton-Watson martingale of a block model.
    GwSim {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        eigen_index: usize,
        #[arg(long, default_value_t = 0)]
        root_type: usize,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// CSV of normalised end values.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn model_spec(path: &Path) -> Result<ModelSpec> {
    Ok(ModelSpec::Sbm(ModelConfig::load(path)?.instance()?.model))
}

fn predict(model: Option<&Path>, out: Option<&Path>, vectors: bool, map: Option<&Path>) -> Result<()> {
    if let Some(p) = map {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(["r", "eta", "rhs"])?;
        let etas: Vec<f64> = (0..=100).map(|i| 0.5 + 0.005 * i as f64).collect();
        for (r, eta, rhs) in threshold_map_rows(&(2..=32).collect::<Vec<_>>(), &etas) {
            w.write_record([r.to_string(), fmt_f64(eta), fmt_f64(rhs)])?;
        }
        w.flush()?;
    }
    let Some(model) = model else {
        if map.is_none() {
            bail!(dispectral::Error::Validation("predict needs --model or --threshold-map".into()));
        }
        return Ok(());
    };
    let spec = model_spec(model)?;
    let es = expected_spectrum(&spec)?;
    let pred = overlap_from_spectrum(&spec, &es)?;
    let rows = |m: &ndarray::Array2<f64>| m.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let cols = |m: &ndarray::Array2<C64>| m.columns().into_iter().map(|c| c.iter().map(|z| pair(*z)).collect::<Vec<_>>()).collect::<Vec<_>>();
    let mut report = json!({
        "mu": es.mu.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
        "rho": es.rho,
        "theta_threshold": es.theta_threshold,
        "r0": es.r0,
        "tau": es.tau,
        "overlap": {
            "a": rows(&pred.a),
            "b": rows(&pred.b),
            "right_defects": pred.right_defects,
            "left_defects": pred.left_defects,
            "empty": pred.empty,
        },
    });
    if let Some(bv) = &es.block {
        report["block"] = json!({
            "f": cols(&bv.f),
            "g": cols(&bv.g),
            "p": bv.summary.p,
            "q": bv.summary.q,
            "modularity": rows(&bv.summary.modularity),
        });
    }
    if vectors {
        report["phi"] = json!(cols(&es.phi));
        report["xi"] = json!(cols(&es.xi));
    }
    write_json(out, &report)
}

#[allow(clippy::too_many_arguments)]
fn cluster(
    input: &Path,
    k: usize,
    r0: &str,
    method: ClusterMethod,
    margin: f64,
    out: &Path,
    diagnostics: Option<&Path>,
    normalize: bool,
    truth: Option<&Path>,
    seed: u64,
) -> Result<()> {
    let a = load_edgelist(input)?;
    let r0 = match r0 {
        "auto" => R0::Auto,
        s => R0::Fixed(s.parse().map_err(|_| dispectral::Error::Validation(format!("--r0 must be an integer or auto, got {s:?}")))?),
    };
    let (partition, diag) = match method {
        ClusterMethod::Gmm | ClusterMethod::Kmeans => {
            let m = if matches!(method, ClusterMethod::Gmm) { Method::Gmm } else { Method::Kmeans };
            let opts = ClusterOptions { method: m, r0, margin, ..ClusterOptions::default() };
            let (p, d) = cluster_digraph(&a, k, &opts, seed)?;
            (p, serde_json::to_value(&d)?)
        }
        ClusterMethod::Svd => (svd_cluster(&a, k, DEFAULT_RESTARTS, seed)?, json!({"method": "svd", "k": k})),
        ClusterMethod::Simpleherm => (
            simpleherm_cluster(&a, k, DEFAULT_RESTARTS, normalize, seed)?,
            json!({"method": "simpleherm", "k": k, "normalize_embedding": normalize}),
        ),
    };
    save_labels(&partition.labels, out)?;
    if let Some(p) = diagnostics {
        write_json(Some(p), &diag)?;
    }
    if let Some(t) = truth {
        let aov = adjusted_overlap(&load_labels(t)?, &partition.labels)?;
        println!("adjusted overlap: {aov:.6}");
    }
    Ok(())
}

fn spectrum(input: &Path, k: usize, model: Option<&Path>, out: &Path, seed: u64) -> Result<()> {
    let a = load_edgelist(input)?;
    let k = k.min(a.n_rows().saturating_sub(1)).max(1);
    let values = top_eigenvalues(&a, k, &SolverConfig::with_seed(seed))?;
    let mut w = csv::Writer::from_writer(create(out)?);
    w.write_record(["kind", "re", "im"])?;
    for v in &values {
        w.write_record(["eigenvalue", &fmt_f64(v.re), &fmt_f64(v.im)])?;
    }
    if let Some(m) = model {
        let es = expected_spectrum(&model_spec(m)?)?;
        for mu in &es.mu[..es.r0] {
            w.write_record(["mu", &fmt_f64(mu.re), &fmt_f64(mu.im)])?;
        }
        w.write_record(["threshold", &fmt_f64(es.theta_threshold), &fmt_f64(0.0)])?;
    }
    w.flush()?;
    Ok(())
}

fn fluctuations(model: &Path, samples: usize, bins: usize, out: &Path, svg: Option<&Path>, moments: Option<&Path>, seed: u64) -> Result<()> {
    let inst = ModelConfig::load(model)?.instance()?;
    let m = &inst.model;
    let n = m.n();
    let proportions: Vec<f64> = (0..m.r()).map(|c| m.sigma_left().iter().filter(|&&x| x == c).count() as f64 / n as f64).collect();
    let cfg = FluctuationConfig { f: m.f().clone(), proportions, n, samples, bins, seed };
    let fl = run_fluctuation_histograms(&cfg)?;
    let mut buf = Vec::new();
    write_histogram_csv(&fl.histogram, &mut buf)?;
    fs::write(out, &buf).with_context(|| format!("cannot write {}", out.display()))?;
    if let Some(p) = svg {
        fs::write(p, plot_csv(buf.as_slice(), PlotKind::Histogram)?)?;
    }
    if let Some(p) = moments {
        write_json(Some(p), &serde_json::to_value(&fl.cluster_moments)?)?;
    }
    Ok(())
}

fn gw_sim(model: &Path, i: usize, root: usize, depth: usize, samples: usize, out: &Path, seed: u64) -> Result<()> {
    let lm = limit_moments(&ModelConfig::load(model)?.instance()?.model)?;
    let cfg = GwConfig::from_moments(&lm, depth, samples, root)?;
    let sim = simulate_martingale(&cfg, i, seed)?;
    let z: Vec<f64> = sim.end_values().iter().map(|v| v / lm.gamma[i]).collect();
    let mut w = csv::Writer::from_writer(create(out)?);
    w.write_record(["sample", "z", "extinct"])?;
    for (s, (v, smp)) in z.iter().zip(&sim.samples).enumerate() {
        w.write_record([s.to_string(), fmt_f64(*v), smp.extinct.to_string()])?;
    }
    w.flush()?;
    let mut report = serde_json::to_value(moment_check(&z, lm.mean[[i, root]], lm.variance[[i, root]])?)?;
    report["overflowed"] = json!(sim.overflowed);
    write_json(None, &report)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Sample { model, out, labels } => {
            let inst = ModelConfig::load(&model)?.instance()?;
            let a = sample(&ModelSpec::Sbm(inst.model.clone()), seed)?;
            save_edgelist(&a, &out)?;
            if let Some(p) = labels {
                save_labels(inst.model.sigma_left(), &p)?;
            }
        }
        Command::Spectrum { input, k, model, out } => spectrum(&input, k, model.as_deref(), &out, seed)?,
        Command::Predict { model, out, vectors, threshold_map } => {
            predict(model.as_deref(), out.as_deref(), vectors, threshold_map.as_deref())?
        }
        Command::Cluster { input, k, r0, method, margin, out, diagnostics, normalize_embedding, truth } => cluster(
            &input,
            k,
            &r0,
            method,
            margin,
            &out,
            diagnostics.as_deref(),
            normalize_embedding,
            truth.as_deref(),
            seed,
        )?,
        Command::Experiment { config, resume } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg, resume)?;
            println!("{} rows written to {}", summary.rows, cfg.outputs.csv.display());
        }
        Command::OverlapValidate { s, eta, n, runs, out, summary } => {
            let rows = run_overlap_validation(s, &eta, n, runs, seed)?;
            write_overlap_csv(&rows, create(&out)?)?;
            if let Some(p) = summary {
                write_json(Some(&p), &serde_json::to_value(summarize_overlaps(&rows))?)?;
            }
        }
        Command::Fluctuations { model, samples, bins, out, svg, moments } => {
            fluctuations(&model, samples, bins, &out, svg.as_deref(), moments.as_deref(), seed)?
        }
        Command::GwSim { model, eigen_index, root_type, depth, samples, out } => {
            gw_sim(&model, eigen_index, root_type, depth, samples, &out, seed)?
        }
        Command::Plot { input, kind, out } => {
            let svg = plot_file(&input, kind.into())?;
            let mut w = create(&out)?;
            w.write_all(svg.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already quote their source; skip repeats.
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            let validation = match e.downcast_ref::<dispectral::Error>() {
                Some(err) => err.is_validation(),
                // Files, CSV and config problems outside the library count
                // as bad input.
                None => true,
            };
            ExitCode::from(if validation { 2 } else { 3 })
        }
    }
}
