//! Predicted outliers, threshold and eigenvector overlaps of the two-block
//! model across eta.
//!
//! cargo run --release --example predict_two_block

use dispectral::model::{two_block_spec, ModelSpec};
use dispectral::theory::{eta_threshold, expected_spectrum, overlap_prediction, two_block_report};

fn main() -> dispectral::Result<()> {
    let s = 10.0;
    println!("second eigenvalue detectable from eta = {:.4}", eta_threshold(s)?);
    println!("{:>6} {:>8} {:>8} {:>8} {:>4} {:>8} {:>8}", "eta", "nu1", "nu2", "theta", "r0", "a11", "a22");
    for eta in [0.6, 0.8, 0.9, 0.95, 0.98, 0.99] {
        let rep = two_block_report(s, eta);
        let spec = ModelSpec::from(two_block_spec(s, eta, 2000)?);
        let es = expected_spectrum(&spec)?;
        let ov = overlap_prediction(&spec)?;
        let a22 = if es.r0 >= 2 { format!("{:.4}", ov.a[[1, 1]]) } else { "-".into() };
        println!(
            "{eta:>6} {:>8.4} {:>8.4} {:>8.4} {:>4} {:>8.4} {a22:>8}",
            rep.nu1, rep.nu2, es.theta_threshold, es.r0, ov.a[[0, 0]]
        );
    }
    Ok(())
}
