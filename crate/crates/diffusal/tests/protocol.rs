//! End-to-end command-line protocol tests plus property-based invariants
//! for the numeric kernels and the results format.

use std::path::Path;
use std::process::Command;

use diffusal::{
    append_results, combine_scores, ppr_push_single, read_results, CombineMode, CsrMatrix,
    Graph, RunResult,
};
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_diffusal");

fn run_ok(dir: &Path, args: &[&str]) -> (String, String) {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout:\n{stdout}\nstderr:\n{stderr}"
    );
    (stdout, stderr)
}

#[test]
fn cli_full_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(
        dir,
        &[
            "gen",
            "--nodes-per-block",
            "12",
            "--features",
            "6",
            "--seed",
            "3",
            "--out",
            "data",
        ],
    );
    for name in ["graph.edges", "features.csv", "labels.csv", "meta.json"] {
        assert!(dir.join("data").join(name).exists(), "missing {name}");
    }

    let small_run = |strategy: &str, extra: &[&str]| {
        let mut args = vec![
            "run",
            "--dataset",
            "data",
            "--strategy",
            strategy,
            "--seeds",
            "0..1",
            "--budget-max-multiple",
            "4",
            "--members",
            "2",
            "--hidden",
            "8",
            "--max-epochs",
            "15",
            "--patience",
            "5",
            "--out",
            "results.csv",
        ];
        args.extend_from_slice(extra);
        run_ok(dir, &args)
    };
    small_run("diffusal", &["--debug-dir", "debug"]);
    small_run("random", &[]);

    let rows = read_results(&dir.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 8, "2 strategies x 2 seeds x 2 budgets");
    assert!(rows.iter().all(|r| r.dataset == "two_block_12x2"));
    assert!(dir.join("results.summary.json").exists());
    let debug_file = dir.join("debug/two_block_12x2_diffusal_seed0.json");
    let debug: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&debug_file).unwrap()).unwrap();
    assert!(debug.as_array().is_some_and(|rounds| !rounds.is_empty()));

    // Completed seeds are skipped on rerun; --fresh redoes them. Either
    // way the deduplicated row set stays the same size.
    let (_, stderr) = small_run("random", &[]);
    assert!(
        stderr.contains("already complete"),
        "resume should skip completed seeds: {stderr}"
    );
    small_run("random", &["--fresh"]);
    let rows = read_results(&dir.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 8);

    let (stdout, _) = run_ok(
        dir,
        &[
            "duel",
            "--results",
            "results.csv",
            "--out",
            "duel.json",
        ],
    );
    assert!(stdout.contains("diffusal"));
    let duel: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("duel.json")).unwrap()).unwrap();
    let strategies: Vec<&str> = duel["strategies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert_eq!(strategies, vec!["diffusal", "random"]);
    assert_eq!(duel["num_settings"], 2);

    run_ok(
        dir,
        &[
            "analyze",
            "--dataset",
            "data",
            "--report",
            "overlap",
            "--budgets",
            "2..4",
            "--out",
            "overlap.csv",
        ],
    );
    let overlap = std::fs::read_to_string(dir.join("overlap.csv")).unwrap();
    let mut lines = overlap.lines();
    assert_eq!(lines.next(), Some("budget,overlap"));
    for line in lines {
        let (budget, frac) = line.split_once(',').unwrap();
        assert!(budget.parse::<usize>().unwrap() >= 4);
        let frac: f64 = frac.parse().unwrap();
        assert!((0.0..=1.0).contains(&frac), "overlap {frac} out of range");
    }

    run_ok(
        dir,
        &[
            "analyze",
            "--dataset",
            "data",
            "--report",
            "classdist",
            "--budgets",
            "2..4",
            "--out",
            "classdist.csv",
        ],
    );
    let classdist = std::fs::read_to_string(dir.join("classdist.csv")).unwrap();
    let mut lines = classdist.lines();
    assert_eq!(lines.next(), Some("budget,class_0,class_1"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        let total: f64 = cells.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "class fractions must sum to 1");
    }
}

#[test]
fn cli_rejects_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--dataset", "missing", "--strategy", "diffusal"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr: {stderr}");

    let out = Command::new(BIN)
        .args(["run", "--dataset", "x", "--strategy", "sorcery"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}

/// Random edge list with node 0 and 1 always connected, so seed 0 is never
/// isolated and the graph construction always succeeds.
fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..40).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..60).prop_map(move |mut edges| {
            edges.push((0, 1));
            let edges: Vec<(usize, usize)> =
                edges.into_iter().filter(|&(u, v)| u != v).collect();
            Graph::from_edges(n, &edges).unwrap().0
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn push_mass_identity_and_bounds(
        graph in graph_strategy(),
        alpha in 0.05f64..1.0,
        epsilon in 1e-6f64..1e-2,
    ) {
        let push = ppr_push_single(&graph, 0, alpha, epsilon).unwrap();
        let estimate_mass: f64 = push.estimate.iter().map(|&(_, p)| p).sum();
        prop_assert!((estimate_mass + push.residual_mass - 1.0).abs() <= 1e-9);
        prop_assert!(push.residual_mass >= -1e-15);
        for &(u, p) in &push.estimate {
            prop_assert!(u < graph.num_nodes());
            prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
        }
        // Sorted by node, no duplicates.
        for w in push.estimate.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
    }

    #[test]
    fn combine_is_order_free_and_positive(
        factors in proptest::collection::vec((1e-3f64..1.0, 1e-3f64..1.0, 1e-3f64..1.0), 1..30),
    ) {
        let u: Vec<f64> = factors.iter().map(|f| f.0).collect();
        let d: Vec<f64> = factors.iter().map(|f| f.1).collect();
        let i: Vec<f64> = factors.iter().map(|f| f.2).collect();
        let m = combine_scores(Some(&u), Some(&d), Some(&i), CombineMode::Multiplicative).unwrap();
        let a = combine_scores(Some(&u), Some(&d), Some(&i), CombineMode::Additive).unwrap();
        for k in 0..factors.len() {
            prop_assert!(m[k] > 0.0);
            prop_assert!((m[k] - u[k] * d[k] * i[k]).abs() <= 1e-12);
            prop_assert!((a[k] - (u[k] + d[k] + i[k])).abs() <= 1e-12);
        }
        // Dropping a factor equals combining the remaining two.
        let partial = combine_scores(Some(&u), None, Some(&i), CombineMode::Multiplicative).unwrap();
        for k in 0..factors.len() {
            prop_assert!((partial[k] - u[k] * i[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn results_csv_round_trips_exactly(
        entries in proptest::collection::vec(
            (
                "[a-z][a-z0-9_]{0,11}",
                "[a-z][a-z0-9_]{0,11}",
                proptest::num::u64::ANY,
                1usize..10_000,
                0f64..=1.0,
                0f64..1e4,
                0f64..1e4,
            ),
            1..20,
        ),
    ) {
        let rows: Vec<RunResult> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| RunResult {
                dataset: e.0.clone(),
                strategy: e.1.clone(),
                seed: e.2,
                // Unique budgets keep last-wins dedupe out of the picture.
                budget: e.3 + i,
                test_accuracy: e.4,
                acq_time_s: e.5,
                train_time_s: e.6,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        append_results(&path, &rows).unwrap();
        let back = read_results(&path).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn sparse_file_round_trips_exactly(
        triplets in proptest::collection::vec(
            (0usize..12, 0usize..9, -1e6f64..1e6),
            0..40,
        ),
    ) {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 9];
        let mut seen = std::collections::HashSet::new();
        for &(r, c, v) in &triplets {
            if seen.insert((r, c)) {
                cols[c].push((r, v));
            }
        }
        let m = CsrMatrix::from_columns(12, cols).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csr");
        m.write_file(&path, &serde_json::json!({"kind": "test"})).unwrap();
        let (back, header) = CsrMatrix::read_file(&path).unwrap();
        prop_assert_eq!(header["kind"].as_str(), Some("test"));
        prop_assert_eq!(back, m);
    }
}
