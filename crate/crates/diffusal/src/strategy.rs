//! Node-selection strategies: the diffusion-based acquisition score and the
//! baselines it is benchmarked against.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clustering::{diversity_scores, ClusterModel};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::model::QbcModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Diffusal,
    Random,
    Entropy,
    Degree,
    Coreset,
}

impl StrategyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "diffusal" => Ok(StrategyKind::Diffusal),
            "random" => Ok(StrategyKind::Random),
            "entropy" => Ok(StrategyKind::Entropy),
            "degree" => Ok(StrategyKind::Degree),
            "coreset" => Ok(StrategyKind::Coreset),
            other => Err(Error::InvalidConfig(format!(
                "unknown strategy {other:?} (expected diffusal|random|entropy|degree|coreset)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Diffusal => "diffusal",
            StrategyKind::Random => "random",
            StrategyKind::Entropy => "entropy",
            StrategyKind::Degree => "degree",
            StrategyKind::Coreset => "coreset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Multiplicative,
    Additive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Score-component toggles; only meaningful for the diffusal strategy.
    pub use_uncertainty: bool,
    pub use_diversity: bool,
    pub use_importance: bool,
    pub combine: CombineMode,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            use_uncertainty: true,
            use_diversity: true,
            use_importance: true,
            combine: CombineMode::Multiplicative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == StrategyKind::Diffusal
            && !(self.use_uncertainty || self.use_diversity || self.use_importance)
        {
            return Err(Error::InvalidConfig(
                "diffusal needs at least one enabled score component".into(),
            ));
        }
        Ok(())
    }

    /// Label used in result rows: the strategy name plus ablation suffixes,
    /// e.g. `diffusal_no_unc` or `diffusal_additive`.
    pub fn label(&self) -> String {
        let mut label = self.kind.name().to_string();
        if self.kind == StrategyKind::Diffusal {
            if !self.use_uncertainty {
                label.push_str("_no_unc");
            }
            if !self.use_diversity {
                label.push_str("_no_div");
            }
            if !self.use_importance {
                label.push_str("_no_imp");
            }
            if self.combine == CombineMode::Additive {
                label.push_str("_additive");
            }
        }
        label
    }
}

/// Combines per-node score components; `None` marks a disabled component.
/// Multiplicative combination takes the product of the enabled components,
/// additive their sum.
pub fn combine_scores(
    uncertainty: Option<&[f64]>,
    diversity: Option<&[f64]>,
    importance: Option<&[f64]>,
    mode: CombineMode,
) -> Result<Vec<f64>> {
    let parts: Vec<&[f64]> = [uncertainty, diversity, importance]
        .into_iter()
        .flatten()
        .collect();
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidInput("no score components enabled".into()))?;
    if parts.iter().any(|p| p.len() != first.len()) {
        return Err(Error::InvalidInput(
            "score component lengths differ".into(),
        ));
    }
    let mut out = match mode {
        CombineMode::Multiplicative => vec![1.0; first.len()],
        CombineMode::Additive => vec![0.0; first.len()],
    };
    for part in parts {
        for (o, &v) in out.iter_mut().zip(part) {
            match mode {
                CombineMode::Multiplicative => *o *= v,
                CombineMode::Additive => *o += v,
            }
        }
    }
    Ok(out)
}

/// Labeled nodes in acquisition order, with the round each one arrived.
#[derive(Debug, Clone, Default)]
pub struct LabeledPool {
    nodes: Vec<usize>,
    rounds: Vec<usize>,
    members: HashSet<usize>,
}

impl LabeledPool {
    pub fn new() -> Self {
        LabeledPool::default()
    }

    pub fn with_initial(nodes: &[usize]) -> Result<Self> {
        let mut pool = LabeledPool::new();
        for &u in nodes {
            pool.add(u, 0)?;
        }
        Ok(pool)
    }

    pub fn add(&mut self, node: usize, round: usize) -> Result<()> {
        if !self.members.insert(node) {
            return Err(Error::InvalidInput(format!(
                "node {node} is already labeled"
            )));
        }
        self.nodes.push(node);
        self.rounds.push(round);
        Ok(())
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.contains(&node)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Acquisition order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn round_of(&self, node: usize) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&u| u == node)
            .map(|i| self.rounds[i])
    }
}

/// Score components of one selected node at the moment it was picked.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreBreakdown {
    pub node: usize,
    pub uncertainty: f64,
    pub diversity: f64,
    pub importance: f64,
    pub combined: f64,
}

/// Static inputs shared by the model-driven strategies for one run.
pub struct SelectionContext<'a> {
    pub px: &'a FeatureMatrix,
    /// Label oracle; consulted only for nodes after they are selected.
    pub labels: &'a LabelVector,
    pub clusters: &'a ClusterModel,
    /// Importance per node, normalized over all nodes.
    pub importance: &'a [f64],
    /// Nodes eligible for labeling (everything outside the validation set),
    /// sorted ascending.
    pub candidates: &'a [usize],
}

/// Outcome of one acquisition batch.
#[derive(Debug, Clone, Default)]
pub struct BatchSelection {
    pub selected: Vec<usize>,
    pub breakdowns: Vec<ScoreBreakdown>,
    /// Seconds spent scoring and ranking.
    pub select_secs: f64,
    /// Seconds spent on the within-batch one-epoch updates.
    pub train_secs: f64,
}

fn unlabeled_of(ctx: &SelectionContext, pool: &LabeledPool) -> Vec<usize> {
    ctx.candidates
        .iter()
        .copied()
        .filter(|&u| !pool.contains(u))
        .collect()
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Multiplicative (or additive) acquisition over uncertainty, diversity,
/// and importance. Nodes are picked one at a time; after each reveal the
/// committee trains for one epoch on the grown pool, so later picks see
/// updated uncertainty. A batch whose best combined score is zero falls
/// back to diversity times importance.
pub fn select_batch_diffusal(
    ctx: &SelectionContext,
    model: &mut QbcModel,
    pool: &mut LabeledPool,
    cfg: &StrategyConfig,
    batch: usize,
    round: usize,
) -> Result<BatchSelection> {
    cfg.validate()?;
    let mut out = BatchSelection::default();
    for _ in 0..batch {
        let t0 = Instant::now();
        let unlabeled = unlabeled_of(ctx, pool);
        if unlabeled.is_empty() {
            return Err(Error::InvalidInput(
                "no unlabeled candidates left for selection".into(),
            ));
        }
        let unc_all = if cfg.use_uncertainty {
            Some(model.uncertainty_scores(ctx.px, &unlabeled)?)
        } else {
            None
        };
        let div_full = diversity_scores(ctx.clusters, pool.nodes());
        let div_all: Vec<f64> = unlabeled.iter().map(|&u| div_full[u]).collect();
        let imp_all: Vec<f64> = unlabeled.iter().map(|&u| ctx.importance[u]).collect();
        let mut combined = combine_scores(
            unc_all.as_deref(),
            if cfg.use_diversity {
                Some(&div_all)
            } else {
                None
            },
            if cfg.use_importance {
                Some(&imp_all)
            } else {
                None
            },
            cfg.combine,
        )?;
        if combined.iter().all(|&s| s == 0.0) {
            combined = combine_scores(
                None,
                Some(&div_all),
                Some(&imp_all),
                CombineMode::Multiplicative,
            )?;
        }
        let pick = argmax_first(&combined);
        let node = unlabeled[pick];
        out.select_secs += t0.elapsed().as_secs_f64();
        out.breakdowns.push(ScoreBreakdown {
            node,
            uncertainty: unc_all.as_ref().map_or(f64::NAN, |u| u[pick]),
            diversity: div_all[pick],
            importance: imp_all[pick],
            combined: combined[pick],
        });
        pool.add(node, round)?;
        out.selected.push(node);
        let t1 = Instant::now();
        model.train_one_epoch(ctx.px, ctx.labels, pool.nodes())?;
        out.train_secs += t1.elapsed().as_secs_f64();
    }
    Ok(out)
}

/// Maximum-predictive-entropy baseline with the same within-batch
/// incremental protocol as the diffusal strategy.
pub fn select_batch_entropy(
    ctx: &SelectionContext,
    model: &mut QbcModel,
    pool: &mut LabeledPool,
    batch: usize,
    round: usize,
) -> Result<BatchSelection> {
    let mut out = BatchSelection::default();
    for _ in 0..batch {
        let t0 = Instant::now();
        let unlabeled = unlabeled_of(ctx, pool);
        if unlabeled.is_empty() {
            return Err(Error::InvalidInput(
                "no unlabeled candidates left for selection".into(),
            ));
        }
        let scores = model.uncertainty_scores(ctx.px, &unlabeled)?;
        let node = unlabeled[argmax_first(&scores)];
        out.select_secs += t0.elapsed().as_secs_f64();
        pool.add(node, round)?;
        out.selected.push(node);
        let t1 = Instant::now();
        model.train_one_epoch(ctx.px, ctx.labels, pool.nodes())?;
        out.train_secs += t1.elapsed().as_secs_f64();
    }
    Ok(out)
}

/// Uniform sample without replacement, ascending for stable pool order.
pub fn select_random(
    unlabeled: &[usize],
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if batch > unlabeled.len() {
        return Err(Error::InvalidInput(format!(
            "batch {batch} exceeds {} unlabeled nodes",
            unlabeled.len()
        )));
    }
    let picks = rand::seq::index::sample(rng, unlabeled.len(), batch);
    let mut out: Vec<usize> = picks.iter().map(|i| unlabeled[i]).collect();
    out.sort_unstable();
    Ok(out)
}

/// Highest-degree nodes, ties to the smaller id.
pub fn select_degree(graph: &Graph, unlabeled: &[usize], batch: usize) -> Result<Vec<usize>> {
    if batch > unlabeled.len() {
        return Err(Error::InvalidInput(format!(
            "batch {batch} exceeds {} unlabeled nodes",
            unlabeled.len()
        )));
    }
    let mut ranked: Vec<usize> = unlabeled.to_vec();
    ranked.sort_by_key(|&u| (std::cmp::Reverse(graph.degree(u)), u));
    ranked.truncate(batch);
    Ok(ranked)
}

/// Greedy k-center in latent space: each pick maximizes the distance to the
/// nearest already-covered point (labeled pool plus earlier picks). With an
/// empty pool the first pick is the smallest unlabeled id.
pub fn select_coreset(
    latents: &Array2<f64>,
    labeled: &[usize],
    unlabeled: &[usize],
    batch: usize,
) -> Result<Vec<usize>> {
    if batch > unlabeled.len() {
        return Err(Error::InvalidInput(format!(
            "batch {batch} exceeds {} unlabeled nodes",
            unlabeled.len()
        )));
    }
    let dist = |a: usize, b: usize| -> f64 {
        latents
            .row(a)
            .iter()
            .zip(latents.row(b).iter())
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum()
    };
    let mut min_d2: Vec<f64> = vec![f64::INFINITY; unlabeled.len()];
    for (i, &u) in unlabeled.iter().enumerate() {
        for &l in labeled {
            let d = dist(u, l);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }
    let mut picked_mask = vec![false; unlabeled.len()];
    let mut picked = Vec::with_capacity(batch);
    for _ in 0..batch {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d2.iter().enumerate() {
            if !picked_mask[i] && d > best_d {
                best_d = d;
                best = i;
            }
        }
        picked_mask[best] = true;
        picked.push(unlabeled[best]);
        for (i, &u) in unlabeled.iter().enumerate() {
            if !picked_mask[i] {
                let d = dist(u, unlabeled[best]);
                if d < min_d2[i] {
                    min_d2[i] = d;
                }
            }
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn labels_and_validation() {
        let mut cfg = StrategyConfig::new(StrategyKind::Diffusal);
        assert_eq!(cfg.label(), "diffusal");
        cfg.use_uncertainty = false;
        assert_eq!(cfg.label(), "diffusal_no_unc");
        cfg.combine = CombineMode::Additive;
        assert_eq!(cfg.label(), "diffusal_no_unc_additive");
        cfg.use_diversity = false;
        cfg.use_importance = false;
        assert!(cfg.validate().is_err());
        let base = StrategyConfig::new(StrategyKind::Degree);
        assert_eq!(base.label(), "degree");
        assert!(base.validate().is_ok());
        assert!(StrategyKind::parse("entropy").is_ok());
        assert!(StrategyKind::parse("nope").is_err());
    }

    #[test]
    fn combine_multiplicative_and_additive() {
        let unc = [0.5, 0.2];
        let div = [1.0, 0.5];
        let imp = [0.1, 0.4];
        let mult = combine_scores(Some(&unc), Some(&div), Some(&imp), CombineMode::Multiplicative)
            .unwrap();
        assert!((mult[0] - 0.05).abs() < 1e-15);
        assert!((mult[1] - 0.04).abs() < 1e-15);
        let add =
            combine_scores(Some(&unc), Some(&div), Some(&imp), CombineMode::Additive).unwrap();
        assert!((add[0] - 1.6).abs() < 1e-15);
        assert!((add[1] - 1.1).abs() < 1e-15);
        // Disabled components drop out entirely.
        let partial =
            combine_scores(None, Some(&div), Some(&imp), CombineMode::Multiplicative).unwrap();
        assert!((partial[1] - 0.2).abs() < 1e-15);
        assert!(combine_scores(None, None, None, CombineMode::Additive).is_err());
        let short = [1.0];
        assert!(combine_scores(Some(&unc), Some(&short), None, CombineMode::Additive).is_err());
    }

    #[test]
    fn pool_rejects_duplicates_and_keeps_order() {
        let mut pool = LabeledPool::with_initial(&[3, 1]).unwrap();
        pool.add(7, 1).unwrap();
        assert!(pool.add(3, 2).is_err());
        assert_eq!(pool.nodes(), &[3, 1, 7]);
        assert_eq!(pool.round_of(7), Some(1));
        assert_eq!(pool.round_of(9), None);
        assert!(pool.contains(1));
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn degree_selection_ranks_hubs_first() {
        let (g, _) = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)]).unwrap();
        // Degrees: 0 -> 3, 1 -> 2, 2 -> 2, 3 -> 2, 4 -> 1.
        let picks = select_degree(&g, &[0, 1, 2, 3, 4], 3).unwrap();
        assert_eq!(picks, vec![0, 1, 2]);
        let without_hub = select_degree(&g, &[1, 2, 3, 4], 2).unwrap();
        assert_eq!(without_hub, vec![1, 2]);
        assert!(select_degree(&g, &[0], 2).is_err());
    }

    #[test]
    fn random_selection_is_seeded_and_unique() {
        use rand::SeedableRng;
        let unlabeled: Vec<usize> = (0..50).collect();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = select_random(&unlabeled, 10, &mut r1).unwrap();
        let b = select_random(&unlabeled, 10, &mut r2).unwrap();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
        assert!(select_random(&unlabeled, 51, &mut r1).is_err());
    }

    #[test]
    fn coreset_spreads_picks() {
        // Latents: three far-apart groups on a line, all coordinates exact
        // in binary so the mid-group distances tie and the smaller id wins.
        let latents = array![[0.0], [0.5], [8.0], [8.5], [16.0], [16.5]];
        let picks = select_coreset(&latents, &[0], &[1, 2, 3, 4, 5], 2).unwrap();
        // Farthest from node 0 is the 16-group, then the 8-group.
        assert_eq!(picks[0], 5);
        assert_eq!(picks[1], 2);
        // Empty labeled pool starts from the smallest id.
        let cold = select_coreset(&latents, &[], &[1, 2, 4], 2).unwrap();
        assert_eq!(cold[0], 1);
        assert_eq!(cold[1], 4);
    }
}
