//! Cluster a sparse pathwise digraph from its adjacency eigenvectors.
//!
//! cargo run --release --example cluster_pathwise

use dispectral::cluster::{adjusted_overlap, cluster_digraph, ClusterOptions, Method};
use dispectral::model::{pathwise_spec, sample, ModelSpec};
use dispectral::theory::calibrate_s;

fn main() -> dispectral::Result<()> {
    let (k, d, n) = (4, 4.0, 2500);
    let s = calibrate_s(k, d);
    for eta in [0.55, 0.7, 0.85] {
        let model = pathwise_spec(k, s, eta, n)?;
        let a = sample(&ModelSpec::from(model.clone()), 11)?;
        for method in [Method::Gmm, Method::Kmeans] {
            let opts = ClusterOptions { method, ..Default::default() };
            let (partition, diag) = cluster_digraph(&a, k, &opts, 11)?;
            let aov = adjusted_overlap(model.sigma_left(), &partition.labels)?;
            println!("eta {eta:.2} {method:?}: r0 = {}, adjusted overlap {aov:.3}", diag.r0);
        }
    }
    Ok(())
}
