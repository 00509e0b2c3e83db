use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{pathwise_f, sizes_from_proportions, SbmModel};
use crate::theory::{calibrate_s, pathwise_mean_degree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Pathwise,
    TwoBlock,
    CustomF,
}

/// How the density of a model is set: directly through `s`, or through a
/// target mean degree `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    S(f64),
    D(f64),
    /// Custom `F` used as given.
    Unscaled,
}

/// A block model instance with the quantities recorded next to results.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub model: SbmModel,
    pub r_blocks: usize,
    /// Density scale actually used (the factor applied to a custom `F`).
    pub s: f64,
    pub eta: Option<f64>,
    /// Requested mean degree, or the mean degree implied by `s`.
    pub d_target: f64,
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != r) {
        return invalid("f must be a nonempty square matrix");
    }
    Ok(Array2::from_shape_fn((r, r), |(i, j)| rows[i][j]))
}

fn blocks_for(kind: ModelKind, r_blocks: Option<usize>) -> Result<usize> {
    match (kind, r_blocks) {
        (ModelKind::TwoBlock, None | Some(2)) => Ok(2),
        (ModelKind::TwoBlock, Some(r)) => invalid(format!("two-block model with r_blocks = {r}")),
        (ModelKind::Pathwise, Some(r)) if r > 0 => Ok(r),
        (ModelKind::Pathwise, _) => invalid("pathwise model needs r_blocks >= 1"),
        (ModelKind::CustomF, _) => unreachable!("custom F takes its size from f"),
    }
}

/// Builds one model instance. `f` and `proportions` are only read for
/// [`ModelKind::CustomF`], `eta` only for the pathwise kinds.
pub fn build_instance(
    kind: ModelKind,
    r_blocks: Option<usize>,
    n: usize,
    eta: Option<f64>,
    density: Density,
    f: Option<&[Vec<f64>]>,
    proportions: Option<&[f64]>,
) -> Result<ModelInstance> {
    match kind {
        ModelKind::Pathwise | ModelKind::TwoBlock => {
            let r = blocks_for(kind, r_blocks)?;
            if f.is_some() || proportions.is_some() {
                return invalid("f and proportions only apply to custom-f models");
            }
            let Some(eta) = eta else {
                return invalid("pathwise models need eta");
            };
            if !(0.5..=1.0).contains(&eta) {
                return invalid(format!("eta = {eta} must lie in [1/2, 1]"));
            }
            let (s, d_target) = match density {
                Density::S(s) => (s, pathwise_mean_degree(r, s)),
                Density::D(d) => (calibrate_s(r, d), d),
                Density::Unscaled => return invalid("pathwise models need s or d"),
            };
            if !(s > 0.0) || !s.is_finite() {
                return invalid(format!("s = {s} must be positive"));
            }
            let model = SbmModel::balanced(pathwise_f(r, s, eta), n)?;
            Ok(ModelInstance { model, r_blocks: r, s, eta: Some(eta), d_target })
        }
        ModelKind::CustomF => {
            if eta.is_some() {
                return invalid("custom-f models take no eta");
            }
            let Some(rows) = f else {
                return invalid("custom-f models need f");
            };
            let base = to_matrix(rows)?;
            let r = base.nrows();
            if r_blocks.is_some_and(|rb| rb != r) {
                return invalid(format!("r_blocks does not match the {r} x {r} f"));
            }
            let p: Vec<f64> = match proportions {
                Some(p) => p.to_vec(),
                None => vec![1.0 / r as f64; r],
            };
            if p.len() != r {
                return invalid(format!("need {r} proportions, got {}", p.len()));
            }
            let sizes = sizes_from_proportions(n, &p)?;
            let w = Array1::from_iter(sizes.iter().map(|&c| c as f64 / n as f64));
            // Mean degree sum_ab p_a F_ab p_b of the unscaled model.
            let d0 = w.dot(&base.dot(&w));
            let s = match density {
                Density::S(s) => s,
                Density::D(d) if d0 > 0.0 => d / d0,
                Density::D(_) => return invalid("cannot rescale an all-zero f to a mean degree"),
                Density::Unscaled => 1.0,
            };
            if !(s > 0.0) || !s.is_finite() {
                return invalid(format!("scale {s} must be positive"));
            }
            let model = SbmModel::with_sizes(base * s, &sizes)?;
            Ok(ModelInstance { model, r_blocks: r, s, eta: None, d_target: s * d0 })
        }
    }
}

fn density_of(s: Option<f64>, d: Option<f64>) -> Result<Density> {
    match (s, d) {
        (Some(_), Some(_)) => invalid("give either s or d, not both"),
        (Some(s), None) => Ok(Density::S(s)),
        (None, Some(d)) => Ok(Density::D(d)),
        (None, None) => Ok(Density::Unscaled),
    }
}

/// A single block model, as read from a model file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_blocks: Option<usize>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
}

impl ModelConfig {
    pub fn instance(&self) -> Result<ModelInstance> {
        build_instance(
            self.kind,
            self.r_blocks,
            self.n,
            self.eta,
            density_of(self.s, self.d)?,
            self.f.as_deref(),
            self.proportions.as_deref(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_toml(path)
    }
}

/// Clustering methods compared by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    /// Adjacency eigenvectors, Gaussian mixture.
    Gmm,
    /// Adjacency eigenvectors, k-means.
    Kmeans,
    Svd,
    Simpleherm,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Gmm => "gmm",
            MethodName::Kmeans => "kmeans",
            MethodName::Svd => "svd",
            MethodName::Simpleherm => "simpleherm",
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmm" => Ok(MethodName::Gmm),
            "kmeans" => Ok(MethodName::Kmeans),
            "svd" => Ok(MethodName::Svd),
            "simpleherm" => Ok(MethodName::Simpleherm),
            _ => invalid(format!("unknown method {s:?}")),
        }
    }
}

/// Model part of an experiment: a grid over `sweep` (eta values) and the
/// degree targets `d` or density scales `s`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentModel {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_blocks: Option<usize>,
    pub n: usize,
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ExperimentModel,
    pub methods: Vec<MethodName>,
    pub runs_per_point: usize,
    pub master_seed: u64,
    /// Pins r0 for the adjacency methods; estimated per graph when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<usize>,
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_toml(path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_point == 0 {
            return invalid("runs_per_point must be at least 1");
        }
        if self.methods.is_empty() {
            return invalid("no methods selected");
        }
        if self.r0 == Some(0) {
            return invalid("r0 must be positive");
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return invalid(format!("method {m} listed twice"));
            }
        }
        self.grid().map(|_| ())
    }

    /// Grid points, degree targets outermost, then eta.
    pub fn grid(&self) -> Result<Vec<ModelInstance>> {
        let m = &self.model;
        let densities: Vec<Density> = match (&m.s, &m.d) {
            (Some(_), Some(_)) => return invalid("give either s or d, not both"),
            (Some(s), None) => s.iter().map(|&v| Density::S(v)).collect(),
            (None, Some(d)) => d.iter().map(|&v| Density::D(v)).collect(),
            (None, None) => vec![Density::Unscaled],
        };
        if densities.is_empty() {
            return invalid("empty list of degree targets");
        }
        let etas: Vec<Option<f64>> = match m.kind {
            ModelKind::CustomF if m.sweep.is_empty() => vec![None],
            ModelKind::CustomF => return invalid("custom-f experiments take no eta sweep"),
            _ if m.sweep.is_empty() => return invalid("empty eta sweep"),
            _ => m.sweep.iter().map(|&e| Some(e)).collect(),
        };
        let mut out = Vec::with_capacity(densities.len() * etas.len());
        for &dens in &densities {
            for &eta in &etas {
                out.push(build_instance(m.kind, m.r_blocks, m.n, eta, dens, m.f.as_deref(), m.proportions.as_deref())?);
            }
        }
        Ok(out)
    }
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
