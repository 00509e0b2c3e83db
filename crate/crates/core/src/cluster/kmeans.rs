//! Lloyd's algorithm with k-means++ seeding.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;

use super::Partition;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};

const MAX_LLOYD_ITER: usize = 300;

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub partition: Partition,
    pub centers: Array2<f64>,
    /// Within-cluster sum of squares.
    pub cost: f64,
}

fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ centers: the first uniformly, then each with probability
/// proportional to the squared distance to the nearest chosen center.
pub(crate) fn kmeans_pp(points: ArrayView2<f64>, k: usize, rng: &mut Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points.outer_iter().map(|p| dist2(p, centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.outer_iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, centers.row(c)));
        }
    }
    centers
}

/// Nearest-center assignment; returns whether any label changed.
fn assign(points: ArrayView2<f64>, centers: &Array2<f64>, labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, p) in points.outer_iter().enumerate() {
        let (best, _) = centers
            .outer_iter()
            .enumerate()
            .map(|(c, m)| (c, dist2(p, m)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
    }
    changed
}

fn update(points: ArrayView2<f64>, labels: &mut [usize], centers: &mut Array2<f64>) {
    let k = centers.nrows();
    loop {
        let mut counts = vec![0usize; k];
        centers.fill(0.0);
        for (p, &l) in points.outer_iter().zip(labels.iter()) {
            counts[l] += 1;
            let mut row = centers.row_mut(l);
            row += &p;
        }
        for (c, &m) in counts.iter().enumerate() {
            if m > 0 {
                let mut row = centers.row_mut(c);
                row /= m as f64;
            }
        }
        let Some(empty) = counts.iter().position(|&m| m == 0) else { return };
        // Split the largest cluster: its point farthest from the center
        // becomes the empty cluster.
        let largest = (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
        let far = (0..labels.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                dist2(points.row(a), centers.row(largest)).total_cmp(&dist2(points.row(b), centers.row(largest))).then(b.cmp(&a))
            })
            .unwrap();
        labels[far] = empty;
    }
}

fn lloyd(points: ArrayView2<f64>, k: usize, seed: u64) -> KMeansFit {
    let mut rng = rng_from_seed(seed);
    let mut centers = kmeans_pp(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.nrows()];
    for _ in 0..MAX_LLOYD_ITER {
        if !assign(points, &centers, &mut labels) {
            break;
        }
        update(points, &mut labels, &mut centers);
    }
    update(points, &mut labels, &mut centers);
    let cost = points.outer_iter().zip(&labels).map(|(p, &l)| dist2(p, centers.row(l))).sum();
    KMeansFit { partition: Partition { labels, k }, centers, cost }
}

/// Best of `restarts` Lloyd runs by within-cluster sum of squares; ties go
/// to the lowest restart index.
pub fn kmeans_fit(points: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let n = points.nrows();
    if k == 0 || k > n {
        return invalid(format!("k = {k} must lie in 1..={n}"));
    }
    if restarts == 0 {
        return invalid("restarts must be positive");
    }
    let runs: Vec<KMeansFit> = (0..restarts).into_par_iter().map(|r| lloyd(points, k, derive_seed(seed, &[r as u64]))).collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.cost < runs[best].cost {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn duplicated_locations_are_recovered_exactly() {
        let base = array![[0.0, 0.0], [5.0, 5.0], [-3.0, 8.0]];
        let pts = Array2::from_shape_fn((30, 2), |(i, j)| base[[i % 3, j]]);
        let fit = kmeans_fit(pts.view(), 3, 10, 1).unwrap();
        assert_eq!(fit.cost, 0.0);
        for i in 0..30 {
            assert_eq!(fit.partition.labels[i], fit.partition.labels[i % 3]);
        }
    }

    #[test]
    fn single_cluster_center_is_mean() {
        let pts = array![[1.0, 2.0], [3.0, 0.0], [2.0, 7.0]];
        let fit = kmeans_fit(pts.view(), 1, 3, 0).unwrap();
        assert!((fit.centers[[0, 0]] - 2.0).abs() < 1e-15 && (fit.centers[[0, 1]] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_many_clusters_is_rejected() {
        let pts = array![[1.0], [2.0]];
        assert!(kmeans_fit(pts.view(), 3, 1, 0).is_err());
    }
}
