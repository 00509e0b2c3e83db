//! Detection thresholds of the pathwise model for r = 2..32 on a log scale.
//!
//! cargo run --release --example plot_thresholds

use dispectral::plot::{plot_csv, threshold_map_rows, PlotKind};

fn main() -> dispectral::Result<()> {
    let rs: Vec<usize> = (2..=32).collect();
    let etas: Vec<f64> = (0..=100).map(|i| 0.5 + 0.005 * i as f64).collect();
    let mut csv = String::from("r,eta,rhs\n");
    for (r, eta, rhs) in threshold_map_rows(&rs, &etas) {
        if rhs.is_finite() {
            csv.push_str(&format!("{r},{eta},{rhs}\n"));
        }
    }
    let svg = plot_csv(csv.as_bytes(), PlotKind::ThresholdMap)?;
    let path = std::env::temp_dir().join("dispectral_thresholds.svg");
    std::fs::write(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(())
}
