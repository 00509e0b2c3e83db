//! Leading eigenpairs of a sparse non-symmetric matrix, checked against the
//! dense QR oracle.
//!
//! cargo run --release --example eigensolver

use dispectral::eigen::{dense_eigen_oracle, top_eigenpairs, SolverConfig};
use dispectral::model::{sample, pathwise_spec, ModelSpec};

fn main() -> dispectral::Result<()> {
    let a = sample(&ModelSpec::from(pathwise_spec(3, 20.0, 0.8, 900)?), 7)?;
    let pairs = top_eigenpairs(&a, 6, &SolverConfig::with_seed(7))?;
    let oracle = dense_eigen_oracle(&a.to_dense())?;
    println!("{:>3} {:>24} {:>24} {:>10}", "i", "sparse", "dense", "residual");
    for i in 0..pairs.len() {
        println!(
            "{i:>3} {:>24} {:>24} {:>10.2e}",
            format!("{:.6}", pairs.values[i]),
            format!("{:.6}", oracle.values[i]),
            pairs.residuals[i]
        );
    }
    // Outliers sit above sqrt(lambda_1); the rest of the spectrum is the bulk.
    println!("sqrt(|lambda_1|) = {:.4}", pairs.values[0].norm().sqrt());
    Ok(())
}
