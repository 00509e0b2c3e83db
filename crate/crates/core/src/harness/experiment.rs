use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, MethodName, ModelInstance};
use crate::baselines::{simpleherm_cluster, svd_cluster, DEFAULT_RESTARTS};
use crate::cluster::{adjusted_overlap, cluster_digraph, ClusterOptions, Method, Partition, R0};
use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::model::{sample, ModelSpec};
use crate::rng::derive_seed;

pub const RECORD_HEADER: [&str; 16] = [
    "run_id", "n", "r_blocks", "s", "eta", "d_target", "method", "seed", "r0_used", "aov", "lambda_1", "lambda_2",
    "lambda_3", "lambda_4", "runtime_ms", "error",
];

/// Eigenvalue moduli kept per record.
const LAMBDAS: usize = 4;

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub partition: Partition,
    pub r0_used: usize,
    /// Leading adjacency eigenvalue moduli (empty for the baselines).
    pub lambdas: Vec<f64>,
}

/// Runs one method on `a`. The adjacency methods estimate r0 unless it is
/// pinned; the baselines always use `k` vectors.
pub fn run_method(a: &crate::SparseMatrix, k: usize, method: MethodName, r0: Option<usize>, seed: u64) -> Result<MethodOutcome> {
    match method {
        MethodName::Gmm | MethodName::Kmeans => {
            let opts = ClusterOptions {
                method: if method == MethodName::Gmm { Method::Gmm } else { Method::Kmeans },
                r0: r0.map_or(R0::Auto, R0::Fixed),
                ..ClusterOptions::default()
            };
            let (partition, diag) = cluster_digraph(a, k, &opts, seed)?;
            let lambdas = diag.eigenvalues.iter().take(LAMBDAS).map(|[re, im]| re.hypot(*im)).collect();
            Ok(MethodOutcome { partition, r0_used: diag.r0, lambdas })
        }
        MethodName::Svd => {
            Ok(MethodOutcome { partition: svd_cluster(a, k, DEFAULT_RESTARTS, seed)?, r0_used: k, lambdas: Vec::new() })
        }
        MethodName::Simpleherm => Ok(MethodOutcome {
            partition: simpleherm_cluster(a, k, DEFAULT_RESTARTS, false, seed)?,
            r0_used: k,
            lambdas: Vec::new(),
        }),
    }
}

/// One CSV row of an experiment.
#[derive(Clone, Debug)]
pub struct ExperimentRecord {
    pub run_id: usize,
    pub n: usize,
    pub r_blocks: usize,
    pub s: f64,
    pub eta: Option<f64>,
    pub d_target: f64,
    pub method: MethodName,
    pub seed: u64,
    pub r0_used: Option<usize>,
    pub aov: Option<f64>,
    pub lambda_values: Vec<f64>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

impl ExperimentRecord {
    fn fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let mut out = vec![
            self.run_id.to_string(),
            self.n.to_string(),
            self.r_blocks.to_string(),
            fmt_f64(self.s),
            opt(self.eta),
            fmt_f64(self.d_target),
            self.method.to_string(),
            self.seed.to_string(),
            self.r0_used.map(|r| r.to_string()).unwrap_or_default(),
            opt(self.aov),
        ];
        out.extend((0..LAMBDAS).map(|i| opt(self.lambda_values.get(i).copied())));
        out.push(self.runtime_ms.to_string());
        // Rows must stay on one line for resume to work.
        out.push(self.error.as_deref().unwrap_or("").replace(['\n', '\r'], " "));
        out
    }
}

/// Graph seed of run `run` at grid point `point`.
pub fn graph_seed(master_seed: u64, point: usize, run: usize) -> u64 {
    derive_seed(master_seed, &[point as u64, run as u64])
}

fn run_task(cfg: &ExperimentConfig, point: usize, inst: &ModelInstance, run: usize, first_id: usize) -> Vec<ExperimentRecord> {
    let seed = graph_seed(cfg.master_seed, point, run);
    let method_seed = derive_seed(seed, &[1]);
    let truth = inst.model.sigma_left().to_vec();
    let graph = sample(&ModelSpec::Sbm(inst.model.clone()), seed);
    cfg.methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let start = Instant::now();
            let result = graph.as_ref().map_err(|e| Error::Numerical(e.to_string())).and_then(|a| {
                let out = run_method(a, inst.r_blocks, method, cfg.r0, method_seed)?;
                let aov = adjusted_overlap(&truth, &out.partition.labels)?;
                Ok((out, aov))
            });
            let runtime_ms = start.elapsed().as_millis() as u64;
            let mut rec = ExperimentRecord {
                run_id: first_id + mi,
                n: inst.model.n(),
                r_blocks: inst.r_blocks,
                s: inst.s,
                eta: inst.eta,
                d_target: inst.d_target,
                method,
                seed,
                r0_used: None,
                aov: None,
                lambda_values: Vec::new(),
                runtime_ms,
                error: None,
            };
            match result {
                Ok((out, aov)) => {
                    rec.r0_used = Some(out.r0_used);
                    rec.aov = Some(aov);
                    rec.lambda_values = out.lambdas;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

/// Number of complete tasks already in `path`, after cutting off any partial
/// trailing task. Returns 0 (and rewrites the header) when the file is
/// missing or empty.
fn prepare_output(path: &Path, rows_per_task: usize, resume: bool) -> Result<usize> {
    let header = RECORD_HEADER.join(",") + "\n";
    let existing = if resume && path.exists() { fs::read_to_string(path)? } else { String::new() };
    if existing.is_empty() {
        fs::write(path, &header)?;
        return Ok(0);
    }
    if !existing.starts_with(&header) {
        return invalid(format!("{} does not start with the expected header", path.display()));
    }
    let mut ends = Vec::new();
    let mut pos = header.len();
    while let Some(off) = existing[pos..].find('\n') {
        pos += off + 1;
        ends.push(pos);
    }
    for (i, end) in ends.iter().enumerate() {
        let start = if i == 0 { header.len() } else { ends[i - 1] };
        let id = existing[start..*end].split(',').next().unwrap_or("");
        if id != i.to_string() {
            return invalid(format!("{}: row {i} has run_id {id:?}", path.display()));
        }
    }
    let tasks = ends.len() / rows_per_task;
    let keep = if tasks == 0 { header.len() } else { ends[tasks * rows_per_task - 1] };
    if keep < existing.len() {
        OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
    }
    Ok(tasks)
}

/// Runs the sweep and writes the CSV (one row per grid point, run and
/// method) and the JSON summary. Rows are written in `run_id` order and
/// flushed per task, so a killed run can be continued with `resume`.
pub fn run_experiment(cfg: &ExperimentConfig, resume: bool) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let per_task = cfg.methods.len();
    let runs = cfg.runs_per_point;
    let total_tasks = grid.len() * runs;
    let done = prepare_output(&cfg.outputs.csv, per_task, resume)?;
    if done > total_tasks {
        return invalid(format!("{} has more rows than the configured sweep", cfg.outputs.csv.display()));
    }
    let file = OpenOptions::new().append(true).open(&cfg.outputs.csv)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);

    let (tx, rx) = mpsc::channel::<(usize, Vec<ExperimentRecord>)>();
    let mut write_result: Result<()> = Ok(());
    std::thread::scope(|scope| {
        let grid = &grid;
        scope.spawn(move || {
            (done..total_tasks).into_par_iter().for_each_with(tx, |tx, t| {
                let (point, run) = (t / runs, t % runs);
                let _ = tx.send((t, run_task(cfg, point, &grid[point], run, t * per_task)));
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = done;
        for (t, rows) in rx {
            pending.insert(t, rows);
            while let Some(rows) = pending.remove(&next) {
                if write_result.is_ok() {
                    write_result = rows
                        .iter()
                        .try_for_each(|r| writer.write_record(r.fields()).map_err(csv_error))
                        .and_then(|_| writer.flush().map_err(Error::from));
                }
                next += 1;
            }
        }
    });
    write_result?;
    drop(writer);
    let summary = summarize_csv(&cfg.outputs.csv)?;
    let mut out = File::create(&cfg.outputs.summary)?;
    serde_json::to_writer_pretty(&mut out, &summary).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(summary)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub s: f64,
    pub eta: Option<f64>,
    pub d_target: f64,
    pub method: String,
    pub runs: usize,
    pub errors: usize,
    pub mean_aov: Option<f64>,
    /// Standard error of the mean over successful runs.
    pub se_aov: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub rows: usize,
    pub points: Vec<PointSummary>,
}

/// Mean and standard error of the adjusted overlap per grid point and method,
/// in order of first appearance.
pub fn summarize_csv(path: &Path) -> Result<ExperimentSummary> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_error)?;
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("missing column {name}")));
    let (cs, ce, cd, cm, ca) = (col("s")?, col("eta")?, col("d_target")?, col("method")?, col("aov")?);
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    let mut keys: Vec<(String, String, String, String)> = Vec::new();
    let mut values: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        rows += 1;
        let key = (rec[cs].to_string(), rec[ce].to_string(), rec[cd].to_string(), rec[cm].to_string());
        let idx = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            keys.push(key);
            values.push((Vec::new(), 0));
            keys.len() - 1
        });
        if rec[ca].is_empty() {
            values[idx].1 += 1;
        } else {
            values[idx].0.push(parse(&rec[ca])?);
        }
    }
    let mut points = Vec::with_capacity(keys.len());
    for ((s, eta, d, method), (v, errors)) in keys.into_iter().zip(values) {
        let m = v.len() as f64;
        let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / m);
        let se = mean.filter(|_| v.len() > 1).map(|mu| (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt());
        points.push(PointSummary {
            s: parse(&s)?,
            eta: if eta.is_empty() { None } else { Some(parse(&eta)?) },
            d_target: parse(&d)?,
            method,
            runs: v.len() + errors,
            errors,
            mean_aov: mean,
            se_aov: se,
        });
    }
    Ok(ExperimentSummary { rows, points })
}
