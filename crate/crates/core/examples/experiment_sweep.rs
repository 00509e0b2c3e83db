//! A small method-comparison sweep written as CSV plus a JSON summary, then
//! rendered as overlap curves.
//!
//! cargo run --release --example experiment_sweep

use dispectral::harness::{run_experiment, ExperimentConfig};
use dispectral::plot::{plot_file, PlotKind};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("dispectral_sweep");
    std::fs::create_dir_all(&dir)?;
    let config = format!(
        r#"
methods = ["gmm", "svd", "simpleherm"]
runs_per_point = 3
master_seed = 1

[model]
kind = "pathwise"
r_blocks = 3
n = 1500
sweep = [0.55, 0.7, 0.85, 0.95]
d = [3.0]

[outputs]
csv = {:?}
summary = {:?}
"#,
        dir.join("sweep.csv"),
        dir.join("sweep.json"),
    );
    let cfg: ExperimentConfig = toml::from_str(&config)?;
    let summary = run_experiment(&cfg, false)?;
    for p in &summary.points {
        println!("eta {:.2} {:<10} aov {:.3} +- {:.3}", p.eta.unwrap_or(f64::NAN), p.method, p.mean_aov.unwrap_or(f64::NAN), p.se_aov.unwrap_or(0.0));
    }
    let svg = plot_file(&cfg.outputs.csv, PlotKind::OverlapCurves)?;
    std::fs::write(dir.join("sweep.svg"), svg)?;
    println!("outputs in {}", dir.display());
    Ok(())
}
