//! Lloyd's k-means with k-means++ seeding and independent restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    /// `K x d` centroids.
    pub centroids: DMatrix<f64>,
}

/// Clusters the rows of `points`. Restart `r` draws from stream `r` of a
/// ChaCha generator seeded with `seed`, so the result does not depend on
/// thread scheduling. The lowest objective wins, ties going to the lowest
/// restart index.
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KmeansResult> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= K <= n, got K={k}, n={n}")));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("k-means needs at least one restart".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let runs: Vec<KmeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let centers = plus_plus(&rows, k, &mut rng);
            lloyd(&rows, centers)
        })
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.objective.total_cmp(&b.objective).then(i.cmp(j)))
        .map(|(_, run)| run)
        .expect("at least one restart");
    Ok(best)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut dist: Vec<f64> = rows.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // rounding can run past the end; fall back to the farthest point
            if dist[chosen] == 0.0 {
                chosen = argmax(&dist);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (d, p) in dist.iter_mut().zip(rows) {
            *d = d.min(sq_dist(p, &rows[pick]));
        }
    }
    centers
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KmeansResult {
    let k = centers.len();
    let d = rows[0].len();
    let mut labels = vec![usize::MAX; rows.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        let mut dists = Vec::with_capacity(rows.len());
        for (label, p) in labels.iter_mut().zip(rows) {
            let (c, dist) = nearest(p, &centers);
            changed |= *label != c;
            *label = c;
            dists.push(dist);
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in rows.iter().zip(&labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // steal the point farthest from its own center
                let far = argmax(&dists);
                centers[c] = rows[far].clone();
                dists[far] = 0.0;
                continue;
            }
            centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    let objective = rows
        .iter()
        .zip(&labels)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    KmeansResult {
        labels,
        objective,
        centroids: DMatrix::from_fn(k, d, |i, j| centers[i][j]),
    }
}
