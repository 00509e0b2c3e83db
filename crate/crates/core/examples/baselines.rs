//! The SVD and SimpleHerm baselines next to the adjacency method on one graph.
//!
//! cargo run --release --example baselines

use dispectral::cluster::adjusted_overlap;
use dispectral::harness::{run_method, MethodName};
use dispectral::model::{pathwise_spec, sample, ModelSpec};
use dispectral::theory::calibrate_s;

fn main() -> dispectral::Result<()> {
    let k = 3;
    for (d, eta) in [(3.0, 0.6), (3.0, 0.9), (8.0, 0.9)] {
        let model = pathwise_spec(k, calibrate_s(k, d), eta, 3000)?;
        let a = sample(&ModelSpec::from(model.clone()), 5)?;
        print!("d {d} eta {eta}:");
        for method in [MethodName::Gmm, MethodName::Svd, MethodName::Simpleherm] {
            let out = run_method(&a, k, method, None, 5)?;
            print!("  {method} {:.3}", adjusted_overlap(model.sigma_left(), &out.partition.labels)?);
        }
        println!();
    }
    Ok(())
}
