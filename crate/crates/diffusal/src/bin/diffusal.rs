//! Command-line benchmark driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diffusal::harness::{self, ExperimentConfig, RoundDebug};
use diffusal::{
    duel_matrix, important_class_distribution, importance_degree_overlap, prepare, read_results,
    two_block_noisy, write_dataset_dir, CombineMode, DiffusionConfig, Error, QbcConfig, Result,
    StrategyConfig, StrategyKind,
};

#[derive(Parser)]
#[command(name = "diffusal", version, about = "Graph active-learning benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one strategy over a seed list and budget grid, appending to a
    /// results CSV as rounds complete.
    Run(RunArgs),
    /// Build the pairwise dueling matrix from a results CSV.
    Duel(DuelArgs),
    /// Structural analyses of the diffusion operator.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic two-block dataset directory.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory (graph.edges, features.csv, labels.csv, meta.json).
    #[arg(long)]
    dataset: PathBuf,
    /// diffusal | random | entropy | degree | coreset
    #[arg(long)]
    strategy: String,
    /// Seed list: comma-separated values and inclusive ranges, e.g. 0..9.
    #[arg(long, default_value = "0..9")]
    seeds: String,
    /// Teleport probabilities, comma-separated, increasing.
    #[arg(long, default_value = "0.05,0.2")]
    alphas: String,
    /// Push tolerance.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Committee size.
    #[arg(long, default_value_t = 5)]
    members: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 300)]
    max_epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Validation nodes held out of the candidate pool.
    #[arg(long, default_value_t = 500)]
    val_size: usize,
    /// Largest budget as a multiple of the class count.
    #[arg(long, default_value_t = 20)]
    budget_max_multiple: usize,
    /// Batch size and budget step as a multiple of the class count.
    #[arg(long, default_value_t = 2)]
    step_multiple: usize,
    #[arg(long, default_value_t = 1)]
    kmeans_restarts: usize,
    /// Disable the uncertainty component (diffusal only).
    #[arg(long)]
    no_unc: bool,
    /// Disable the diversity component (diffusal only).
    #[arg(long)]
    no_div: bool,
    /// Disable the importance component (diffusal only).
    #[arg(long)]
    no_imp: bool,
    /// multiplicative | additive
    #[arg(long, default_value = "multiplicative")]
    combine: String,
    /// Swap the diffusion operator for the squared normalized adjacency.
    #[arg(long)]
    two_hop: bool,
    /// Cache file for the diffusion matrix.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Directory for per-round score breakdowns of diffusal picks.
    #[arg(long)]
    debug_dir: Option<PathBuf>,
    /// Re-run seeds even when the results file already covers them.
    #[arg(long)]
    fresh: bool,
    /// Output CSV; appended to and deduplicated on read.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DuelArgs {
    #[arg(long)]
    results: PathBuf,
    /// Significance threshold for a win.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "duel.json")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// overlap | classdist
    #[arg(long)]
    report: String,
    /// Budgets as multiples of the class count, e.g. 2..20 or 2,4,8.
    #[arg(long, default_value = "2..20")]
    budgets: String,
    #[arg(long, default_value = "0.05,0.2")]
    alphas: String,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long)]
    two_hop: bool,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 30)]
    nodes_per_block: usize,
    #[arg(long, default_value_t = 8)]
    features: usize,
    /// Uniform feature-noise amplitude relative to the signal level 1.0.
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses "0..9" (inclusive), "3", or "0,2,5" into a seed list.
fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad seed range start {lo:?}")))?;
            let hi: u64 = hi
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad seed range end {hi:?}")))?;
            if hi < lo {
                return Err(Error::InvalidConfig(format!("empty seed range {part:?}")));
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(
                part.parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad seed {part:?}")))?,
            );
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds given".into()));
    }
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad alpha {s:?}")))
        })
        .collect()
}

/// Budget multiples: "2..20" walks in steps of `step`, otherwise a comma
/// list of explicit multiples.
fn parse_budget_multiples(spec: &str, step: usize) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad budget start {lo:?}")))?;
        let hi: usize = hi
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad budget end {hi:?}")))?;
        if hi < lo || step == 0 {
            return Err(Error::InvalidConfig(format!("empty budget range {spec:?}")));
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("bad budget {s:?}")))
            })
            .collect()
    }
}

fn combine_mode(s: &str) -> Result<CombineMode> {
    match s {
        "multiplicative" => Ok(CombineMode::Multiplicative),
        "additive" => Ok(CombineMode::Additive),
        other => Err(Error::InvalidConfig(format!(
            "unknown combine mode {other:?} (expected multiplicative|additive)"
        ))),
    }
}

fn write_debug(dir: &PathBuf, dataset: &str, label: &str, seed: u64, rounds: &[RoundDebug]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.clone(), e))?;
    let path = dir.join(format!("{dataset}_{label}_seed{seed}.json"));
    let text = serde_json::to_string_pretty(rounds)
        .map_err(|e| Error::InvalidInput(format!("debug serialization: {e}")))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let kind = StrategyKind::parse(&args.strategy)?;
    let mut strategy = StrategyConfig::new(kind);
    strategy.use_uncertainty = !args.no_unc;
    strategy.use_diversity = !args.no_div;
    strategy.use_importance = !args.no_imp;
    strategy.combine = combine_mode(&args.combine)?;
    let cfg = ExperimentConfig {
        dataset_dir: args.dataset.clone(),
        strategy,
        diffusion: DiffusionConfig::new(parse_alphas(&args.alphas)?, args.epsilon)?,
        model: QbcConfig {
            members: args.members,
            hidden: args.hidden,
            dropout: args.dropout,
            learning_rate: args.learning_rate,
            weight_decay: args.weight_decay,
            max_epochs: args.max_epochs,
            patience: args.patience,
            seed: 0,
        },
        seeds: parse_seeds(&args.seeds)?,
        val_size: args.val_size,
        budget_max_multiple: args.budget_max_multiple,
        step_multiple: args.step_multiple,
        two_hop: args.two_hop,
        kmeans_restarts: args.kmeans_restarts,
        cache_path: args.cache.clone(),
    };
    cfg.validate()?;
    eprintln!("preparing {}", cfg.dataset_dir.display());
    let prep = prepare(&cfg)?;
    for w in prep.dataset.report.warnings() {
        eprintln!("warning: {w}");
    }
    let ds_name = prep.dataset.name.clone();
    let label = cfg.strategy_label();
    let budgets = cfg.budgets(prep.dataset.num_classes());
    eprintln!(
        "dataset {ds_name}: {} nodes, {} edges, {} classes; budgets {budgets:?}",
        prep.dataset.num_nodes(),
        prep.dataset.graph.num_edges(),
        prep.dataset.num_classes()
    );
    let done = if args.fresh || !args.out.exists() {
        Default::default()
    } else {
        harness::completed_runs(&read_results(&args.out)?, &budgets)
    };
    let mut all_rows = Vec::new();
    for &seed in &cfg.seeds {
        let key = (ds_name.clone(), label.clone(), seed);
        if done.contains(&key) {
            eprintln!("seed {seed}: already complete, skipping (use --fresh to redo)");
            continue;
        }
        let out = harness::run_prepared(&prep, &cfg, seed)?;
        harness::append_results(&args.out, &out.rows)?;
        for r in &out.rows {
            eprintln!(
                "seed {seed} budget {:>4}: accuracy {:.4} (acq {:.3}s, train {:.3}s)",
                r.budget, r.test_accuracy, r.acq_time_s, r.train_time_s
            );
        }
        if let Some(dir) = &args.debug_dir {
            write_debug(dir, &ds_name, &label, seed, &out.debug)?;
        }
        all_rows.extend(out.rows);
    }
    let everything = read_results(&args.out)?;
    let summary_path = args.out.with_extension("summary.json");
    harness::write_summary(&summary_path, &everything)?;
    eprintln!(
        "wrote {} new row(s) to {}; summary at {}",
        all_rows.len(),
        args.out.display(),
        summary_path.display()
    );
    Ok(())
}

fn cmd_duel(args: DuelArgs) -> Result<()> {
    let rows = read_results(&args.results)?;
    let duel = duel_matrix(&rows, args.alpha)?;
    let text = serde_json::to_string_pretty(&duel)
        .map_err(|e| Error::InvalidInput(format!("duel serialization: {e}")))?;
    std::fs::write(&args.out, text + "\n").map_err(|e| Error::io(&args.out, e))?;
    let width = duel
        .strategies
        .iter()
        .map(|s| s.len())
        .max()
        .unwrap_or(8)
        .max(8);
    print!("{:>width$}", "");
    for s in &duel.strategies {
        print!(" {s:>width$}");
    }
    println!(" {:>width$} {:>width$}", "avg_wins", "avg_loss");
    for (i, s) in duel.strategies.iter().enumerate() {
        print!("{s:>width$}");
        for j in 0..duel.strategies.len() {
            print!(" {:>width$.1}", duel.win_pct[i][j]);
        }
        println!(
            " {:>width$.1} {:>width$.1}",
            duel.avg_wins[i], duel.avg_losses[i]
        );
    }
    println!(
        "{} setting(s), significance {}; matrix written to {}",
        duel.num_settings,
        duel.significance,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        dataset_dir: args.dataset.clone(),
        diffusion: DiffusionConfig::new(parse_alphas(&args.alphas)?, args.epsilon)?,
        two_hop: args.two_hop,
        cache_path: args.cache.clone(),
        ..ExperimentConfig::default()
    };
    let prep = prepare(&cfg)?;
    let classes = prep.dataset.num_classes();
    let multiples = parse_budget_multiples(&args.budgets, cfg.step_multiple)?;
    let budgets: Vec<usize> = multiples.iter().map(|m| m * classes).collect();
    let mut out = String::new();
    match args.report.as_str() {
        "overlap" => {
            out.push_str("budget,overlap\n");
            for (k, frac) in
                importance_degree_overlap(&prep.importance, &prep.dataset.graph, &budgets)?
            {
                out.push_str(&format!("{k},{frac}\n"));
            }
        }
        "classdist" => {
            out.push_str("budget");
            for c in 0..classes {
                out.push_str(&format!(",class_{c}"));
            }
            out.push('\n');
            for (k, dist) in
                important_class_distribution(&prep.importance, &prep.dataset.labels, &budgets)?
            {
                out.push_str(&k.to_string());
                for f in dist {
                    out.push_str(&format!(",{f}"));
                }
                out.push('\n');
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown report {other:?} (expected overlap|classdist)"
            )))
        }
    }
    std::fs::write(&args.out, &out).map_err(|e| Error::io(&args.out, e))?;
    eprintln!("wrote {}", args.out.display());
    print!("{out}");
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let ds = two_block_noisy(args.nodes_per_block, args.features, args.noise, args.seed)?;
    write_dataset_dir(&args.out, &ds)?;
    eprintln!(
        "wrote {} ({} nodes, {} classes) to {}",
        ds.name,
        ds.labels.len(),
        ds.num_classes,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Duel(args) => cmd_duel(args),
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
