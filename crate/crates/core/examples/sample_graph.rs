//! Draw a two-block digraph, write it as an edge list and read it back.
//!
//! cargo run --release --example sample_graph

use dispectral::io::{load_edgelist, save_edgelist};
use dispectral::model::{sample, two_block_spec, ModelSpec};

fn main() -> dispectral::Result<()> {
    let model = two_block_spec(10.0, 0.9, 2000)?;
    let spec = ModelSpec::from(model.clone());
    let a = sample(&spec, 1)?;
    println!("n = {}, edges = {} (expected {:.1})", a.n_rows(), a.nnz(), spec.expected_edges());

    // Edges between the two blocks go mostly one way.
    let mut counts = [[0usize; 2]; 2];
    for (x, y, _) in a.iter() {
        counts[model.sigma_left()[x]][model.sigma_right()[y]] += 1;
    }
    println!("block edge counts: {counts:?}");

    let path = std::env::temp_dir().join("dispectral_two_block.tsv");
    save_edgelist(&a, &path)?;
    let back = load_edgelist(&path)?;
    assert_eq!(back.nnz(), a.nnz());
    println!("round trip through {} ok", path.display());
    Ok(())
}
