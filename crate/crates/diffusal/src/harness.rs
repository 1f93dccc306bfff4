//! Benchmark harness: seeded experiment runs over a budget grid, persistent
//! results, the dueling matrix, and structural analyses.

use std::collections::{HashMap, HashSet};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clustering::{initial_pool, kmeans_restarts};
use crate::diffusion::{
    diffusion_matrix, importance_scores, load_cache, propagate_features, save_cache,
    two_hop_matrix, DiffusionConfig, DiffusionMatrix,
};
use crate::error::{Error, Result};
use crate::graph::{
    l1_normalize_rows, largest_connected_component, load_dataset, Dataset, FeatureMatrix, Graph,
    LabelVector,
};
use crate::model::{QbcConfig, QbcModel};
use crate::stats::welch_t_test;
use crate::strategy::{
    select_batch_diffusal, select_batch_entropy, select_coreset, select_degree, select_random,
    LabeledPool, ScoreBreakdown, SelectionContext, StrategyConfig, StrategyKind,
};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub strategy: StrategyConfig,
    pub diffusion: DiffusionConfig,
    /// Template for per-round models; its `seed` is replaced by a value
    /// derived from the run seed.
    pub model: QbcConfig,
    pub seeds: Vec<u64>,
    /// Requested validation-set size; shrinks to n/4 when the budget grid
    /// would not fit beside it.
    pub val_size: usize,
    /// Largest budget as a multiple of the class count.
    pub budget_max_multiple: usize,
    /// Batch size (and budget step) as a multiple of the class count.
    pub step_multiple: usize,
    /// Replace the diffusion operator with the squared normalized adjacency.
    pub two_hop: bool,
    pub kmeans_restarts: usize,
    /// Optional path for persisting/reusing the diffusion matrix.
    pub cache_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset_dir: PathBuf::new(),
            strategy: StrategyConfig::new(StrategyKind::Diffusal),
            diffusion: DiffusionConfig::default(),
            model: QbcConfig::default(),
            seeds: (0..10).collect(),
            val_size: 500,
            budget_max_multiple: 20,
            step_multiple: 2,
            two_hop: false,
            kmeans_restarts: 1,
            cache_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        self.diffusion.validate()?;
        self.model.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must be non-empty".into()));
        }
        if self.val_size == 0 {
            return Err(Error::InvalidConfig("val_size must be positive".into()));
        }
        if self.step_multiple == 0 || self.budget_max_multiple == 0 {
            return Err(Error::InvalidConfig(
                "budget multiples must be positive".into(),
            ));
        }
        if !self.budget_max_multiple.is_multiple_of(self.step_multiple) {
            return Err(Error::InvalidConfig(format!(
                "budget_max_multiple {} must be a multiple of step_multiple {}",
                self.budget_max_multiple, self.step_multiple
            )));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::InvalidConfig("kmeans_restarts must be positive".into()));
        }
        Ok(())
    }

    /// Result-row label: strategy label plus the diffusion-variant suffix.
    pub fn strategy_label(&self) -> String {
        let mut label = self.strategy.label();
        if self.two_hop {
            label.push_str("_2hop");
        }
        label
    }

    /// Budget grid in absolute node counts for a `num_classes`-way dataset.
    pub fn budgets(&self, num_classes: usize) -> Vec<usize> {
        let step = self.step_multiple * num_classes;
        (1..=self.budget_max_multiple / self.step_multiple)
            .map(|k| k * step)
            .collect()
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub dataset: String,
    pub strategy: String,
    pub seed: u64,
    pub budget: usize,
    pub test_accuracy: f64,
    pub acq_time_s: f64,
    pub train_time_s: f64,
}

pub const RESULTS_HEADER: &str = "dataset,strategy,seed,budget,test_accuracy,acq_time_s,train_time_s";

/// Appends rows, writing the header first when the file is new or empty.
pub fn append_results(path: &Path, rows: &[RunResult]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        if fresh {
            writeln!(w, "{RESULTS_HEADER}")?;
        }
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.dataset, r.strategy, r.seed, r.budget, r.test_accuracy, r.acq_time_s, r.train_time_s
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Reads a results file, deduplicating repeated (dataset, strategy, seed,
/// budget) keys in favor of the last occurrence so interrupted runs can
/// append corrected rows.
pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<RunResult> = Vec::new();
    let mut index: HashMap<(String, String, u64, usize), usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != RESULTS_HEADER {
                return Err(Error::parse(path, 1, "unexpected results header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(path, i + 1, "expected 7 fields"));
        }
        let row = RunResult {
            dataset: fields[0].to_string(),
            strategy: fields[1].to_string(),
            seed: fields[2]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad seed"))?,
            budget: fields[3]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad budget"))?,
            test_accuracy: fields[4]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad test_accuracy"))?,
            acq_time_s: fields[5]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad acq_time_s"))?,
            train_time_s: fields[6]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad train_time_s"))?,
        };
        let key = (
            row.dataset.clone(),
            row.strategy.clone(),
            row.seed,
            row.budget,
        );
        match index.get(&key) {
            Some(&at) => rows[at] = row,
            None => {
                index.insert(key, rows.len());
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Shared per-dataset state reused across seeds and strategies.
pub struct PreparedData {
    pub dataset: Dataset,
    pub diffusion: DiffusionMatrix,
    pub propagated: FeatureMatrix,
    pub importance: Vec<f64>,
}

/// Loads, restricts to the largest connected component, normalizes
/// features, builds the diffusion operator (honoring the cache when set),
/// and pre-diffuses the features.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let raw = load_dataset(&cfg.dataset_dir)?;
    let mut ds = largest_connected_component(&raw)?;
    ds.features = l1_normalize_rows(&ds.features)?;
    let n = ds.num_nodes();
    let diffusion = match &cfg.cache_path {
        Some(path) => {
            match load_cache(path, &ds.name, n, &cfg.diffusion, cfg.two_hop)? {
                Some(m) => m,
                None => {
                    let m = build_operator(&ds.graph, cfg)?;
                    save_cache(path, &m, &ds.name, n, &cfg.diffusion, cfg.two_hop)?;
                    m
                }
            }
        }
        None => build_operator(&ds.graph, cfg)?,
    };
    let propagated = propagate_features(&diffusion, &ds.features)?;
    let importance = if cfg.two_hop {
        // The squared normalized operator is ranked by column mass.
        let mut sums = diffusion.col_sums();
        let total: f64 = sums.iter().sum();
        if total > 0.0 {
            for s in &mut sums {
                *s /= total;
            }
        }
        sums
    } else {
        importance_scores(&diffusion)
    };
    Ok(PreparedData {
        dataset: ds,
        diffusion,
        propagated,
        importance,
    })
}

fn build_operator(graph: &Graph, cfg: &ExperimentConfig) -> Result<DiffusionMatrix> {
    if cfg.two_hop {
        two_hop_matrix(graph)
    } else {
        diffusion_matrix(graph, &cfg.diffusion)
    }
}

/// Validation / candidate split; both lists sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub validation: Vec<usize>,
    pub candidates: Vec<usize>,
}

pub fn make_splits(ds: &Dataset, seed: u64, val_size: usize) -> Result<Splits> {
    let n = ds.num_nodes();
    if val_size >= n {
        return Err(Error::InvalidInput(format!(
            "validation size {val_size} must be below {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut validation: Vec<usize> = rand::seq::index::sample(&mut rng, n, val_size).into_vec();
    validation.sort_unstable();
    let val_set: HashSet<usize> = validation.iter().copied().collect();
    let candidates = (0..n).filter(|u| !val_set.contains(u)).collect();
    Ok(Splits {
        validation,
        candidates,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent sub-stream seed for one component of a run.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

const STREAM_KMEANS: u64 = 1;
const STREAM_INIT_POOL: u64 = 2;
const STREAM_MODEL_BASE: u64 = 1000;
const STREAM_RANDOM_BASE: u64 = 2000;

/// Per-round diffusal pick details for one run.
#[derive(Debug, Clone, Serialize)]
pub struct RoundDebug {
    /// Pool size the acquisition grew the labeled set to.
    pub budget: usize,
    pub picks: Vec<ScoreBreakdown>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<RunResult>,
    pub debug: Vec<RoundDebug>,
}

/// Effective validation size for `n` nodes: the requested size when it fits
/// beside the largest budget, otherwise n/4.
fn effective_val_size(n: usize, requested: usize, max_budget: usize) -> Result<usize> {
    let val = if requested + max_budget >= n {
        n / 4
    } else {
        requested
    };
    if val == 0 || val + max_budget >= n {
        return Err(Error::InvalidInput(format!(
            "budget grid up to {max_budget} leaves no test nodes on {n} nodes"
        )));
    }
    Ok(val)
}

/// One seeded run over the full budget grid. Each round retrains from
/// scratch, evaluates on the held-out remainder, then acquires the next
/// batch; acquisition cost lands on the row whose pool it produced.
pub fn run_prepared(prep: &PreparedData, cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let ds = &prep.dataset;
    let px = &prep.propagated;
    let n = ds.num_nodes();
    let classes = ds.num_classes();
    let batch = cfg.step_multiple * classes;
    let budgets = cfg.budgets(classes);
    let max_budget = *budgets.last().expect("validated grid is non-empty");
    let val_size = effective_val_size(n, cfg.val_size, max_budget)?;
    let splits = make_splits(ds, seed, val_size)?;
    if splits.candidates.len() < max_budget {
        return Err(Error::InvalidInput(format!(
            "only {} candidates for a budget of {max_budget}",
            splits.candidates.len()
        )));
    }
    let label = cfg.strategy_label();
    let mut cand_mask = vec![false; n];
    for &u in &splits.candidates {
        cand_mask[u] = true;
    }

    let clusters = kmeans_restarts(px, batch, sub_seed(seed, STREAM_KMEANS), cfg.kmeans_restarts)?;

    let acq_start = Instant::now();
    let initial = match cfg.strategy.kind {
        StrategyKind::Diffusal => initial_pool(&clusters, px, batch, Some(&cand_mask))?,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, STREAM_INIT_POOL));
            select_random(&splits.candidates, batch, &mut rng)?
        }
    };
    let mut pending_acq = acq_start.elapsed().as_secs_f64();
    let mut pending_incremental = 0f64;
    let mut pool = LabeledPool::with_initial(&initial)?;

    let ctx = SelectionContext {
        px,
        labels: &ds.labels,
        clusters: &clusters,
        importance: &prep.importance,
        candidates: &splits.candidates,
    };
    let val_set: HashSet<usize> = splits.validation.iter().copied().collect();
    let mut rows = Vec::with_capacity(budgets.len());
    let mut debug = Vec::new();
    for (round, &budget) in budgets.iter().enumerate() {
        debug_assert_eq!(pool.len(), budget);
        let mut model_cfg = cfg.model.clone();
        model_cfg.seed = sub_seed(seed, STREAM_MODEL_BASE + round as u64);
        let mut model = QbcModel::init(&model_cfg, px.ncols(), classes)?;
        let train_start = Instant::now();
        model.train_full(px, &ds.labels, pool.nodes(), &splits.validation)?;
        let train_secs = train_start.elapsed().as_secs_f64() + pending_incremental;
        let test: Vec<usize> = (0..n)
            .filter(|&u| !pool.contains(u) && !val_set.contains(&u))
            .collect();
        let test_accuracy = model.accuracy(px, &ds.labels, &test)?;
        rows.push(RunResult {
            dataset: ds.name.clone(),
            strategy: label.clone(),
            seed,
            budget,
            test_accuracy,
            acq_time_s: pending_acq,
            train_time_s: train_secs,
        });
        if budget == max_budget {
            break;
        }
        let next_round = round + 1;
        match cfg.strategy.kind {
            StrategyKind::Diffusal => {
                let sel = select_batch_diffusal(
                    &ctx,
                    &mut model,
                    &mut pool,
                    &cfg.strategy,
                    batch,
                    next_round,
                )?;
                pending_acq = sel.select_secs;
                pending_incremental = sel.train_secs;
                debug.push(RoundDebug {
                    budget: budget + batch,
                    picks: sel.breakdowns,
                });
            }
            StrategyKind::Entropy => {
                let sel =
                    select_batch_entropy(&ctx, &mut model, &mut pool, batch, next_round)?;
                pending_acq = sel.select_secs;
                pending_incremental = sel.train_secs;
            }
            StrategyKind::Random => {
                let t0 = Instant::now();
                let unlabeled: Vec<usize> = splits
                    .candidates
                    .iter()
                    .copied()
                    .filter(|&u| !pool.contains(u))
                    .collect();
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(
                    seed,
                    STREAM_RANDOM_BASE + next_round as u64,
                ));
                let picks = select_random(&unlabeled, batch, &mut rng)?;
                for u in picks {
                    pool.add(u, next_round)?;
                }
                pending_acq = t0.elapsed().as_secs_f64();
                pending_incremental = 0.0;
            }
            StrategyKind::Degree => {
                let t0 = Instant::now();
                let unlabeled: Vec<usize> = splits
                    .candidates
                    .iter()
                    .copied()
                    .filter(|&u| !pool.contains(u))
                    .collect();
                let picks = select_degree(&ds.graph, &unlabeled, batch)?;
                for u in picks {
                    pool.add(u, next_round)?;
                }
                pending_acq = t0.elapsed().as_secs_f64();
                pending_incremental = 0.0;
            }
            StrategyKind::Coreset => {
                let t0 = Instant::now();
                let unlabeled: Vec<usize> = splits
                    .candidates
                    .iter()
                    .copied()
                    .filter(|&u| !pool.contains(u))
                    .collect();
                let latents = model.latents(px)?;
                let picks = select_coreset(&latents, pool.nodes(), &unlabeled, batch)?;
                for u in picks {
                    pool.add(u, next_round)?;
                }
                pending_acq = t0.elapsed().as_secs_f64();
                pending_incremental = 0.0;
            }
        }
    }
    Ok(RunOutput { rows, debug })
}

/// Convenience wrapper: prepare the dataset and execute one seed.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    let prep = prepare(cfg)?;
    run_prepared(&prep, cfg, seed)
}

/// Pairwise dueling matrix over all (dataset, budget) settings present in
/// the rows. `win_pct[i][j]` is the percentage of settings where strategy
/// `i` beats `j`: higher mean accuracy with a Welch p-value below
/// `significance`.
#[derive(Debug, Clone, Serialize)]
pub struct DuelMatrix {
    pub strategies: Vec<String>,
    pub win_pct: Vec<Vec<f64>>,
    pub avg_wins: Vec<f64>,
    pub avg_losses: Vec<f64>,
    pub num_settings: usize,
    pub significance: f64,
}

pub fn duel_matrix(rows: &[RunResult], significance: f64) -> Result<DuelMatrix> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidInput(format!(
            "significance {significance} outside (0, 1)"
        )));
    }
    if rows.is_empty() {
        return Err(Error::IncompleteResults("no result rows".into()));
    }
    let mut strategies: Vec<String> = rows.iter().map(|r| r.strategy.clone()).collect();
    strategies.sort();
    strategies.dedup();
    let mut settings: Vec<(String, usize)> = rows
        .iter()
        .map(|r| (r.dataset.clone(), r.budget))
        .collect();
    settings.sort();
    settings.dedup();
    let mut samples: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let strat_idx: HashMap<&str, usize> = strategies
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let setting_idx: HashMap<(String, usize), usize> = settings
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    for r in rows {
        let si = strat_idx[r.strategy.as_str()];
        let ci = setting_idx[&(r.dataset.clone(), r.budget)];
        samples.entry((si, ci)).or_default().push(r.test_accuracy);
    }
    for (si, s) in strategies.iter().enumerate() {
        for (ci, (ds, budget)) in settings.iter().enumerate() {
            let count = samples.get(&(si, ci)).map_or(0, |v| v.len());
            if count < 2 {
                return Err(Error::IncompleteResults(format!(
                    "strategy {s} has {count} seed(s) for {ds} at budget {budget}; need at least 2"
                )));
            }
        }
    }
    let k = strategies.len();
    let mut win_pct = vec![vec![0f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut wins = 0usize;
            for ci in 0..settings.len() {
                let a = &samples[&(i, ci)];
                let b = &samples[&(j, ci)];
                let mean_a: f64 = a.iter().sum::<f64>() / a.len() as f64;
                let mean_b: f64 = b.iter().sum::<f64>() / b.len() as f64;
                let test = welch_t_test(a, b)?;
                if mean_a > mean_b && test.p_value < significance {
                    wins += 1;
                }
            }
            win_pct[i][j] = 100.0 * wins as f64 / settings.len() as f64;
        }
    }
    let avg = |row: &dyn Fn(usize) -> f64, skip: usize| -> f64 {
        if k <= 1 {
            return 0.0;
        }
        (0..k).filter(|&j| j != skip).map(row).sum::<f64>() / (k - 1) as f64
    };
    let avg_wins: Vec<f64> = (0..k).map(|i| avg(&|j| win_pct[i][j], i)).collect();
    let avg_losses: Vec<f64> = (0..k).map(|i| avg(&|j| win_pct[j][i], i)).collect();
    Ok(DuelMatrix {
        strategies,
        win_pct,
        avg_wins,
        avg_losses,
        num_settings: settings.len(),
        significance,
    })
}

fn top_k_by_score(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Overlap fraction between the top-k nodes by importance and by degree,
/// for each budget k.
pub fn importance_degree_overlap(
    importance: &[f64],
    graph: &Graph,
    budgets: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let n = graph.num_nodes();
    if importance.len() != n {
        return Err(Error::InvalidInput(
            "importance length does not match graph".into(),
        ));
    }
    let degree_scores: Vec<f64> = (0..n).map(|u| graph.degree(u) as f64).collect();
    let mut out = Vec::with_capacity(budgets.len());
    for &k in budgets {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "budget {k} outside 1..={n}"
            )));
        }
        let by_imp: HashSet<usize> = top_k_by_score(importance, k).into_iter().collect();
        let by_deg = top_k_by_score(&degree_scores, k);
        let both = by_deg.iter().filter(|u| by_imp.contains(u)).count();
        out.push((k, both as f64 / k as f64));
    }
    Ok(out)
}

/// Class distribution among the top-k important nodes for each budget,
/// followed by the global distribution keyed by n.
pub fn important_class_distribution(
    importance: &[f64],
    labels: &LabelVector,
    budgets: &[usize],
) -> Result<Vec<(usize, Vec<f64>)>> {
    let n = labels.len();
    if importance.len() != n {
        return Err(Error::InvalidInput(
            "importance length does not match labels".into(),
        ));
    }
    let fractions = |nodes: &[usize]| -> Vec<f64> {
        let counts = labels.class_counts(nodes.iter().copied());
        counts
            .iter()
            .map(|&c| c as f64 / nodes.len() as f64)
            .collect()
    };
    let mut out = Vec::with_capacity(budgets.len() + 1);
    for &k in budgets {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "budget {k} outside 1..={n}"
            )));
        }
        out.push((k, fractions(&top_k_by_score(importance, k))));
    }
    let all: Vec<usize> = (0..n).collect();
    out.push((n, fractions(&all)));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct StrategySummary {
    strategy: String,
    seeds: usize,
    budgets: Vec<usize>,
    mean_accuracy: Vec<f64>,
}

/// JSON digest next to the results file: per-strategy mean accuracy by
/// budget over whatever seeds are present.
pub fn write_summary(path: &Path, rows: &[RunResult]) -> Result<()> {
    let mut datasets: Vec<String> = rows.iter().map(|r| r.dataset.clone()).collect();
    datasets.sort();
    datasets.dedup();
    let mut strategies: Vec<String> = rows.iter().map(|r| r.strategy.clone()).collect();
    strategies.sort();
    strategies.dedup();
    let mut summaries = Vec::new();
    for s in &strategies {
        let mine: Vec<&RunResult> = rows.iter().filter(|r| &r.strategy == s).collect();
        let mut budgets: Vec<usize> = mine.iter().map(|r| r.budget).collect();
        budgets.sort_unstable();
        budgets.dedup();
        let mut seeds: Vec<u64> = mine.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let mean_accuracy = budgets
            .iter()
            .map(|&b| {
                let accs: Vec<f64> = mine
                    .iter()
                    .filter(|r| r.budget == b)
                    .map(|r| r.test_accuracy)
                    .collect();
                accs.iter().sum::<f64>() / accs.len() as f64
            })
            .collect();
        summaries.push(StrategySummary {
            strategy: s.clone(),
            seeds: seeds.len(),
            budgets,
            mean_accuracy,
        });
    }
    let doc = serde_json::json!({
        "datasets": datasets,
        "strategies": summaries,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidInput(format!("summary serialization: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Keys (dataset, strategy, seed) whose rows already cover every budget in
/// `budgets`; used to skip finished runs on resume.
pub fn completed_runs(
    rows: &[RunResult],
    budgets: &[usize],
) -> HashSet<(String, String, u64)> {
    let mut seen: HashMap<(String, String, u64), HashSet<usize>> = HashMap::new();
    for r in rows {
        seen.entry((r.dataset.clone(), r.strategy.clone(), r.seed))
            .or_default()
            .insert(r.budget);
    }
    seen.into_iter()
        .filter(|(_, got)| budgets.iter().all(|b| got.contains(b)))
        .map(|(k, _)| k)
        .collect()
}
