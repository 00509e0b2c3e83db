//! Histograms of rescaled eigenvector entries per cluster with the predicted
//! Gaussian-mixture overlay.
//!
//! cargo run --release --example fluctuations

use dispectral::harness::{run_fluctuation_histograms, write_histogram_csv, FluctuationConfig};
use dispectral::plot::{plot_file, PlotKind};
use ndarray::array;

fn main() -> anyhow::Result<()> {
    let cfg = FluctuationConfig {
        f: array![[48.0, 6.0], [12.0, 24.0]],
        proportions: vec![2.0 / 3.0, 1.0 / 3.0],
        n: 5000,
        samples: 5,
        bins: 50,
        seed: 2,
    };
    let fl = run_fluctuation_histograms(&cfg)?;
    for m in &fl.cluster_moments {
        println!(
            "u{} on cluster {}: mean {:.3} (target {:.3}), variance {:.3} (target {:.3}), zeros {:.4}",
            m.eigen_index + 1,
            m.cluster + 1,
            m.mean,
            m.target_mean,
            m.variance,
            m.target_variance,
            m.zero_fraction
        );
    }
    let csv = std::env::temp_dir().join("dispectral_fluctuations.csv");
    write_histogram_csv(&fl.histogram, std::fs::File::create(&csv)?)?;
    let svg = csv.with_extension("svg");
    std::fs::write(&svg, plot_file(&csv, PlotKind::Histogram)?)?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
