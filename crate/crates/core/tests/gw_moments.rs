//! Galton-Watson martingale moments against the closed-form limits.

use dispectral::gw::{moment_check, simulate_martingale, GwConfig};
use dispectral::model::SbmModel;
use dispectral::theory::limit_moments;
use ndarray::array;

fn f1() -> SbmModel {
    SbmModel::with_sizes(array![[6.0, 4.0], [5.0, 3.0]], &[2000, 1000]).unwrap()
}

#[test]
fn martingale_mean_is_constant_in_depth() {
    let lm = limit_moments(&f1()).unwrap();
    for j in 0..2 {
        let cfg = GwConfig::from_moments(&lm, 8, 20_000, j).unwrap();
        let sim = simulate_martingale(&cfg, 0, 5 + j as u64).unwrap();
        assert_eq!(sim.overflowed, 0);
        for t in 1..=8 {
            let rep = moment_check(&sim.values_at(t), lm.f[[j, 0]], 0.0).unwrap();
            assert!(rep.z_mean.abs() < 3.5, "root {j}, t = {t}: z = {}", rep.z_mean);
        }
        assert!(sim.samples.iter().all(|s| s.values[0] == lm.f[[j, 0]]));
    }
}

#[test]
fn second_moment_stays_below_limit() {
    let lm = limit_moments(&f1()).unwrap();
    let g2 = lm.gamma[0] * lm.gamma[0];
    for j in 0..2 {
        let target = lm.second_moment[[0, j]] * g2;
        let cfg = GwConfig::from_moments(&lm, 8, 20_000, j).unwrap();
        let sim = simulate_martingale(&cfg, 0, 17 + j as u64).unwrap();
        for t in 1..=8 {
            let sq: Vec<f64> = sim.values_at(t).iter().map(|v| v * v).collect();
            let rep = moment_check(&sq, target, 0.0).unwrap();
            assert!(rep.mean <= target + 3.0 * rep.se_mean, "root {j}, t = {t}: {} > {target}", rep.mean);
        }
    }
}
