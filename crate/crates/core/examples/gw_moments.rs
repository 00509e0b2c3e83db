//! Galton-Watson martingale limits against the closed-form moments of the
//! eigenvector entry fluctuations.
//!
//! cargo run --release --example gw_moments

use dispectral::gw::check_all;
use dispectral::model::SbmModel;
use dispectral::theory::limit_moments;
use ndarray::array;

fn main() -> dispectral::Result<()> {
    for f in [array![[6.0, 4.0], [5.0, 3.0]], array![[48.0, 6.0], [12.0, 24.0]]] {
        let m = SbmModel::with_sizes(f.clone(), &[2000, 1000])?;
        let lm = limit_moments(&m)?;
        println!("F = {:?}, nu = {:?}", f.as_slice().unwrap(), lm.nu);
        for (i, j, rep, _) in check_all(&lm, 12, 50_000, 3)? {
            println!(
                "  Z[{i},{j}]: mean {:.4} (target {:.4}, z {:+.2}), variance {:.4} (target {:.4}, z {:+.2}), zeros {:.4}",
                rep.mean, rep.target_mean, rep.z_mean, rep.variance, rep.target_variance, rep.z_variance, rep.atom_fraction
            );
        }
    }
    Ok(())
}
