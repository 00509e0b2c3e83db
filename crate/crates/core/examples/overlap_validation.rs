//! Sample eigenvector overlaps in the two-block model against the predicted
//! limits.
//!
//! cargo run --release --example overlap_validation

use dispectral::harness::{run_overlap_validation, summarize_overlaps};

fn main() -> dispectral::Result<()> {
    let rows = run_overlap_validation(10.0, &[0.7, 0.9, 0.98, 0.99], 2000, 5, 1)?;
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "eta", "lambda1", "o11", "a11", "o22", "a22");
    for p in summarize_overlaps(&rows) {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8} {:>8.3} {:>8}",
            p.eta,
            p.mean_lambda1,
            p.mean_o11,
            fmt(p.a11),
            p.mean_o22,
            fmt(p.a22)
        );
    }
    Ok(())
}
