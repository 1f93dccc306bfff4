//! Personalized-PageRank diffusion operators.
//!
//! The diffusion matrix sums push-approximated PPR matrices over several
//! teleport probabilities. Column `j` of a single-alpha matrix approximates
//! `alpha * (I - (1 - alpha) * A D^-1)^-1 e_j`: the stationary mass a lazy
//! random walk seeded at `j` deposits on each node.

use std::collections::VecDeque;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph};
use crate::sparse::CsrMatrix;

/// Diffusion operator in CSR form; entry `(i, j)` is mass at node `i` from a
/// walk seeded at node `j`.
pub type DiffusionMatrix = CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    /// Teleport probabilities, strictly increasing, each in (0, 1].
    pub alphas: Vec<f64>,
    /// Push tolerance: a node keeps residual below `epsilon * degree`.
    pub epsilon: f64,
}

impl DiffusionConfig {
    pub fn new(alphas: Vec<f64>, epsilon: f64) -> Result<Self> {
        let cfg = DiffusionConfig { alphas, epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidConfig("alphas must be non-empty".into()));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "alpha {a} outside (0, 1]"
                )));
            }
        }
        if self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "alphas must be strictly increasing".into(),
            ));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            alphas: vec![0.05, 0.2],
            epsilon: 1e-4,
        }
    }
}

/// One approximated PPR column.
#[derive(Debug, Clone)]
pub struct PprColumn {
    /// `(node, mass)` pairs sorted by node; zero entries omitted.
    pub estimate: Vec<(usize, f64)>,
    /// Mass still held in residuals at termination.
    pub residual_mass: f64,
}

/// Forward push from a single seed. Maintains `sum(estimate) +
/// sum(residual) = 1` and stops once every node `u` has residual below
/// `epsilon * degree(u)`. Entries that end below the threshold are kept.
pub fn ppr_push_single(
    graph: &Graph,
    seed: usize,
    alpha: f64,
    epsilon: f64,
) -> Result<PprColumn> {
    let n = graph.num_nodes();
    if seed >= n {
        return Err(Error::InvalidInput(format!(
            "seed {seed} out of range for {n} nodes"
        )));
    }
    if alpha.is_nan() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1]")));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if graph.degree(seed) == 0 {
        return Err(Error::InvalidInput(format!(
            "seed {seed} is isolated; push requires positive degree"
        )));
    }
    let mut estimate = vec![0f64; n];
    let mut residual = vec![0f64; n];
    let mut in_queue = vec![false; n];
    let mut queue = VecDeque::new();
    residual[seed] = 1.0;
    in_queue[seed] = true;
    queue.push_back(seed);
    while let Some(u) = queue.pop_front() {
        in_queue[u] = false;
        let deg = graph.degree(u) as f64;
        let r = residual[u];
        if r < epsilon * deg {
            continue;
        }
        estimate[u] += alpha * r;
        residual[u] = 0.0;
        let share = (1.0 - alpha) * r / deg;
        if share == 0.0 {
            continue;
        }
        for &v in graph.neighbors(u) {
            residual[v] += share;
            if !in_queue[v] && residual[v] >= epsilon * graph.degree(v) as f64 {
                in_queue[v] = true;
                queue.push_back(v);
            }
        }
    }
    let residual_mass = residual.iter().sum();
    let estimate = estimate
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    Ok(PprColumn {
        estimate,
        residual_mass,
    })
}

/// All-seeds PPR for one alpha, columns computed independently.
pub fn ppr_matrix(graph: &Graph, alpha: f64, epsilon: f64) -> Result<DiffusionMatrix> {
    let n = graph.num_nodes();
    let columns: Result<Vec<Vec<(usize, f64)>>> = (0..n)
        .into_par_iter()
        .map(|seed| ppr_push_single(graph, seed, alpha, epsilon).map(|c| c.estimate))
        .collect();
    CsrMatrix::from_columns(n, columns?)
}

/// Entrywise sum of single-alpha matrices.
pub fn multiscale_sum(parts: &[DiffusionMatrix]) -> Result<DiffusionMatrix> {
    let mut it = parts.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidInput("no matrices to sum".into()))?;
    let mut acc = first.clone();
    for m in it {
        acc = acc.add(m)?;
    }
    Ok(acc)
}

/// Diffusion operator for a full config: sum of per-alpha PPR matrices.
pub fn diffusion_matrix(graph: &Graph, cfg: &DiffusionConfig) -> Result<DiffusionMatrix> {
    cfg.validate()?;
    let parts: Result<Vec<DiffusionMatrix>> = cfg
        .alphas
        .iter()
        .map(|&a| ppr_matrix(graph, a, cfg.epsilon))
        .collect();
    multiscale_sum(&parts?)
}

/// Smoothed features `P * X`.
pub fn propagate_features(p: &DiffusionMatrix, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    p.matmul_dense(x.view())
}

/// Structural importance: row sums of the diffusion matrix, L1-normalized
/// over all nodes (total mass is positive whenever the matrix is non-empty).
pub fn importance_scores(p: &DiffusionMatrix) -> Vec<f64> {
    let mut sums = p.row_sums();
    let total: f64 = sums.iter().sum();
    if total > 0.0 {
        for s in &mut sums {
            *s /= total;
        }
    }
    sums
}

/// Two-hop ablation operator: the symmetrically normalized adjacency with
/// self-loops, squared. `S = D^-1/2 (A + I) D^-1/2`, returns `S^2`.
pub fn two_hop_matrix(graph: &Graph) -> Result<DiffusionMatrix> {
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| 1.0 / ((graph.degree(u) + 1) as f64).sqrt())
        .collect();
    let mut triplets = Vec::with_capacity(2 * graph.num_edges() + n);
    for u in 0..n {
        triplets.push((u, u, inv_sqrt[u] * inv_sqrt[u]));
        for &v in graph.neighbors(u) {
            triplets.push((u, v, inv_sqrt[u] * inv_sqrt[v]));
        }
    }
    let s = CsrMatrix::from_triplets(n, n, &triplets)?;
    s.matmul_sparse(&s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheHeader {
    dataset: String,
    num_nodes: usize,
    config: DiffusionConfig,
    two_hop: bool,
}

/// Persists a diffusion matrix with enough context to detect staleness.
pub fn save_cache(
    path: &Path,
    matrix: &DiffusionMatrix,
    dataset: &str,
    num_nodes: usize,
    cfg: &DiffusionConfig,
    two_hop: bool,
) -> Result<()> {
    let header = CacheHeader {
        dataset: dataset.to_string(),
        num_nodes,
        config: cfg.clone(),
        two_hop,
    };
    let value = serde_json::to_value(&header)
        .map_err(|e| Error::InvalidInput(format!("cache header: {e}")))?;
    matrix.write_file(path, &value)
}

/// Loads a cached matrix if its header matches; `Ok(None)` on mismatch so
/// callers can recompute, errors only on unreadable files.
pub fn load_cache(
    path: &Path,
    dataset: &str,
    num_nodes: usize,
    cfg: &DiffusionConfig,
    two_hop: bool,
) -> Result<Option<DiffusionMatrix>> {
    if !path.exists() {
        return Ok(None);
    }
    let (matrix, header) = CsrMatrix::read_file(path)?;
    let header: CacheHeader = match serde_json::from_value(header) {
        Ok(h) => h,
        Err(_) => return Ok(None),
    };
    let expect = CacheHeader {
        dataset: dataset.to_string(),
        num_nodes,
        config: cfg.clone(),
        two_hop,
    };
    if header == expect && matrix.n_rows() == num_nodes && matrix.n_cols() == num_nodes {
        Ok(Some(matrix))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> Graph {
        Graph::from_edges(2, &[(0, 1)]).unwrap().0
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap().0
    }

    fn star4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap().0
    }

    fn column_dense(g: &Graph, seed: usize, alpha: f64, eps: f64) -> Vec<f64> {
        let col = ppr_push_single(g, seed, alpha, eps).unwrap();
        let mut out = vec![0f64; g.num_nodes()];
        for (u, p) in col.estimate {
            out[u] = p;
        }
        out
    }

    #[test]
    fn two_node_path_closed_form() {
        // Exact PPR on a 2-path with alpha 0.2 is (5/9, 4/9) from either seed.
        let g = path2();
        let col = column_dense(&g, 0, 0.2, 1e-10);
        assert!((col[0] - 5.0 / 9.0).abs() < 1e-8, "got {col:?}");
        assert!((col[1] - 4.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn triangle_closed_form() {
        // Symmetry gives (3/7, 2/7, 2/7) at alpha 0.2.
        let g = triangle();
        let col = column_dense(&g, 0, 0.2, 1e-10);
        assert!((col[0] - 3.0 / 7.0).abs() < 1e-8, "got {col:?}");
        assert!((col[1] - 2.0 / 7.0).abs() < 1e-8);
        assert!((col[2] - 2.0 / 7.0).abs() < 1e-8);
    }

    #[test]
    fn mass_conservation_and_residual_bound() {
        let g = star4();
        for seed in 0..4 {
            let col = ppr_push_single(&g, seed, 0.2, 1e-3).unwrap();
            let mass: f64 = col.estimate.iter().map(|&(_, p)| p).sum();
            assert!((mass + col.residual_mass - 1.0).abs() < 1e-12);
            assert!(col.residual_mass >= 0.0);
        }
    }

    #[test]
    fn alpha_one_is_a_point_mass() {
        let g = triangle();
        let col = ppr_push_single(&g, 1, 1.0, 1e-6).unwrap();
        assert_eq!(col.estimate, vec![(1, 1.0)]);
        assert_eq!(col.residual_mass, 0.0);
    }

    #[test]
    fn isolated_seed_rejected() {
        let (g, _) = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(ppr_push_single(&g, 2, 0.2, 1e-4).is_err());
    }

    #[test]
    fn bad_parameters_rejected() {
        let g = path2();
        assert!(ppr_push_single(&g, 0, 0.0, 1e-4).is_err());
        assert!(ppr_push_single(&g, 0, 1.5, 1e-4).is_err());
        assert!(ppr_push_single(&g, 0, 0.2, 0.0).is_err());
        assert!(ppr_push_single(&g, 9, 0.2, 1e-4).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DiffusionConfig::new(vec![0.05, 0.2], 1e-4).is_ok());
        assert!(DiffusionConfig::new(vec![], 1e-4).is_err());
        assert!(DiffusionConfig::new(vec![0.2, 0.05], 1e-4).is_err());
        assert!(DiffusionConfig::new(vec![0.2, 0.2], 1e-4).is_err());
        assert!(DiffusionConfig::new(vec![0.2], 0.0).is_err());
        let d = DiffusionConfig::default();
        assert_eq!(d.alphas, vec![0.05, 0.2]);
        assert_eq!(d.epsilon, 1e-4);
    }

    #[test]
    fn multiscale_sum_adds_columns() {
        let g = triangle();
        let a = ppr_matrix(&g, 0.1, 1e-9).unwrap();
        let b = ppr_matrix(&g, 0.5, 1e-9).unwrap();
        let sum = multiscale_sum(&[a.clone(), b.clone()]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((sum.get(i, j) - a.get(i, j) - b.get(i, j)).abs() < 1e-15);
            }
        }
        assert!(multiscale_sum(&[]).is_err());
    }

    #[test]
    fn star_importance_concentrates_on_hub() {
        // Exact single-alpha PPR row sums on the 4-star at alpha 0.2:
        // hub 17/9, each leaf 19/27; importance keeps the hub on top.
        let g = star4();
        let p = ppr_matrix(&g, 0.2, 1e-12).unwrap();
        let row_sums = p.row_sums();
        assert!((row_sums[0] - 17.0 / 9.0).abs() < 1e-6, "got {row_sums:?}");
        for &leaf_sum in &row_sums[1..] {
            assert!((leaf_sum - 19.0 / 27.0).abs() < 1e-6);
        }
        let imp = importance_scores(&p);
        let total: f64 = imp.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(imp[0] > imp[1]);
    }

    #[test]
    fn star_column_sums_stay_near_one() {
        let g = star4();
        let eps = 1e-3;
        let p = ppr_matrix(&g, 0.2, eps).unwrap();
        for (j, s) in p.col_sums().into_iter().enumerate() {
            assert!(s <= 1.0 + 1e-12, "column {j} sums to {s}");
            assert!(s >= 1.0 - 3.0 * eps, "column {j} sums to {s}");
        }
    }

    #[test]
    fn two_hop_rows_reach_two_hop_neighborhood() {
        // Path 0-1-2-3: node 0 reaches {0,1,2} in two hops but not 3.
        let (g, _) = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = two_hop_matrix(&g).unwrap();
        assert!(m.get(0, 2) > 0.0);
        assert_eq!(m.get(0, 3), 0.0);
        // Symmetric normalization of a symmetric matrix stays symmetric.
        for i in 0..4 {
            for j in 0..4 {
                assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cache_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csr");
        let g = triangle();
        let cfg = DiffusionConfig::new(vec![0.05, 0.2], 1e-5).unwrap();
        let p = diffusion_matrix(&g, &cfg).unwrap();
        save_cache(&path, &p, "tri", 3, &cfg, false).unwrap();
        let back = load_cache(&path, "tri", 3, &cfg, false).unwrap().unwrap();
        assert_eq!(back, p);
        // Any config drift invalidates the cache.
        let other = DiffusionConfig::new(vec![0.05, 0.2], 1e-6).unwrap();
        assert!(load_cache(&path, "tri", 3, &other, false).unwrap().is_none());
        assert!(load_cache(&path, "other", 3, &cfg, false).unwrap().is_none());
        assert!(load_cache(&path, "tri", 3, &cfg, true).unwrap().is_none());
        assert!(load_cache(&dir.path().join("absent.csr"), "tri", 3, &cfg, false)
            .unwrap()
            .is_none());
    }
}
