//! Spectral clustering of sparse directed graphs from the eigenvectors of the
//! raw adjacency matrix, with the analytic outlier and overlap predictions for
//! inhomogeneous random digraphs and a Monte Carlo harness to check them.

pub mod baselines;
pub mod cluster;
pub mod eigen;
pub mod error;
pub mod gw;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod rng;
pub mod sparse;
pub mod theory;

pub use error::{Error, Result};
pub use sparse::{SparseMatrix, C64};
