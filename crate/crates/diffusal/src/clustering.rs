//! K-means over diffused features, used for the initial pool and for the
//! diversity term of the acquisition score.

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;

const MAX_ITERS: usize = 300;

#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster index per node.
    pub assignments: Vec<usize>,
    /// `k x d` centroid matrix.
    pub centroids: Array2<f64>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// k-means++ seeding: first centroid uniform, the rest sampled proportional
/// to squared distance from the nearest chosen centroid. If every remaining
/// distance is zero the smallest unchosen id is taken.
fn seed_centroids(x: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.nrows();
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut best_d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(x.row(i), x.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = best_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in best_d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 && d > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // Floating-point underrun at the tail: fall back to the last
            // positive-distance point.
            pick.unwrap_or_else(|| {
                best_d2
                    .iter()
                    .rposition(|&d| d > 0.0)
                    .expect("total > 0 implies a positive entry")
            })
        } else {
            (0..n)
                .find(|&i| !is_chosen[i])
                .expect("k <= n leaves an unchosen point")
        };
        chosen.push(next);
        is_chosen[next] = true;
        for (i, best) in best_d2.iter_mut().enumerate() {
            let d = sq_dist(x.row(i), x.row(next));
            if d < *best {
                *best = d;
            }
        }
    }
    chosen
}

/// Assigns each point to its nearest centroid; ties go to the lower cluster
/// index. Uses one dense product for the cross terms.
fn assign(x: &FeatureMatrix, centroids: &Array2<f64>) -> Vec<usize> {
    let cross = x.dot(&centroids.t());
    let cent_norms: Vec<f64> = centroids
        .axis_iter(Axis(0))
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    (0..x.nrows())
        .map(|i| {
            let row = cross.row(i);
            let mut best = 0usize;
            let mut best_score = cent_norms[0] - 2.0 * row[0];
            for c in 1..centroids.nrows() {
                let score = cent_norms[c] - 2.0 * row[c];
                if score < best_score {
                    best_score = score;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding. Runs until assignments are
/// stable or 300 iterations. An empty cluster is re-seeded to the point
/// farthest from its currently assigned centroid (ties to the smaller id).
pub fn kmeans(x: &FeatureMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds {n} points"
        )));
    }
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = seed_centroids(x, k, &mut rng);
    let mut centroids = Array2::<f64>::zeros((k, d));
    for (c, &i) in seeds.iter().enumerate() {
        centroids.row_mut(c).assign(&x.row(i));
    }
    let mut assignments = assign(x, &centroids);
    for _ in 0..MAX_ITERS {
        // Means of each cluster.
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += &x.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mut row = sums.row_mut(c);
                row.mapv_inplace(|v| v / count as f64);
            }
        }
        // Re-seed empty clusters before the next assignment pass.
        let mut stolen = vec![false; n];
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                continue;
            }
            let mut far_i = usize::MAX;
            let mut far_d = -1.0;
            for i in 0..n {
                if stolen[i] {
                    continue;
                }
                let di = sq_dist(x.row(i), centroids.row(assignments[i]));
                if di > far_d {
                    far_d = di;
                    far_i = i;
                }
            }
            sums.row_mut(c).assign(&x.row(far_i));
            stolen[far_i] = true;
        }
        centroids = sums;
        let next = assign(x, &centroids);
        let converged = next == assignments;
        assignments = next;
        if converged {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(x.row(i), centroids.row(assignments[i])))
        .sum();
    Ok(ClusterModel {
        k,
        assignments,
        centroids,
        inertia,
    })
}

/// Best of `restarts` runs by inertia; restart `r` perturbs the seed stream.
pub fn kmeans_restarts(
    x: &FeatureMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be positive".into()));
    }
    let mut best: Option<ClusterModel> = None;
    for r in 0..restarts {
        let model = kmeans(x, k, seed.wrapping_add(r as u64))?;
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Diversity of each node: `1 - |labeled in node's cluster| / |labeled|`.
/// With nothing labeled every node scores 1.
pub fn diversity_scores(model: &ClusterModel, labeled: &[usize]) -> Vec<f64> {
    let total = labeled.len();
    if total == 0 {
        return vec![1.0; model.assignments.len()];
    }
    let mut per_cluster = vec![0usize; model.k];
    for &u in labeled {
        per_cluster[model.assignments[u]] += 1;
    }
    model
        .assignments
        .iter()
        .map(|&c| 1.0 - per_cluster[c] as f64 / total as f64)
        .collect()
}

/// One representative per cluster: for cluster index 0, 1, ... pick the
/// not-yet-picked node nearest that centroid (ties to the smaller id).
/// `allowed` restricts the candidates when present.
pub fn initial_pool(
    model: &ClusterModel,
    x: &FeatureMatrix,
    size: usize,
    allowed: Option<&[bool]>,
) -> Result<Vec<usize>> {
    let n = x.nrows();
    if size != model.k {
        return Err(Error::InvalidInput(format!(
            "pool size {size} must match cluster count {}",
            model.k
        )));
    }
    if let Some(mask) = allowed {
        if mask.len() != n {
            return Err(Error::InvalidInput("allowed mask length mismatch".into()));
        }
        if mask.iter().filter(|&&a| a).count() < size {
            return Err(Error::InvalidInput(format!(
                "pool size {size} exceeds allowed node count"
            )));
        }
    } else if size > n {
        return Err(Error::InvalidInput(format!(
            "pool size {size} exceeds {n} nodes"
        )));
    }
    let mut taken = vec![false; n];
    let mut pool = Vec::with_capacity(size);
    for c in 0..model.k {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if taken[i] || allowed.is_some_and(|m| !m[i]) {
                continue;
            }
            let d = sq_dist(x.row(i), model.centroids.row(c));
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        taken[best] = true;
        pool.push(best);
    }
    Ok(pool)
}
