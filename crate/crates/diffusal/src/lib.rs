//! Active learning on graphs with multi-scale diffusion.
//!
//! The pipeline: approximate personalized-PageRank diffusion smooths node
//! features once up front; a committee of dropout-regularized classifiers
//! trains on the diffused features; nodes are acquired by the product of
//! predictive uncertainty, cluster-based diversity, and structural
//! importance. A benchmark harness runs seeded comparisons against random,
//! entropy, degree, and coreset baselines and summarizes them in a pairwise
//! dueling matrix.
//!
//! ```
//! use diffusal::{diffusion_matrix, DiffusionConfig, Graph};
//!
//! let (graph, _) = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
//! let p = diffusion_matrix(&graph, &DiffusionConfig::default()).unwrap();
//! assert_eq!(p.n_rows(), 3);
//! ```

pub mod clustering;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod model;
pub mod sparse;
pub mod stats;
pub mod strategy;
pub mod synth;

pub use clustering::{diversity_scores, initial_pool, kmeans, kmeans_restarts, ClusterModel};
pub use diffusion::{
    diffusion_matrix, importance_scores, multiscale_sum, ppr_matrix, ppr_push_single,
    propagate_features, two_hop_matrix, DiffusionConfig, DiffusionMatrix, PprColumn,
};
pub use error::{Error, Result};
pub use graph::{
    l1_normalize_rows, largest_connected_component, load_dataset, Dataset, FeatureMatrix, Graph,
    LabelVector,
};
pub use harness::{
    append_results, completed_runs, duel_matrix, important_class_distribution,
    importance_degree_overlap, make_splits, prepare, read_results, run_experiment, run_prepared,
    write_summary, DuelMatrix, ExperimentConfig, PreparedData, RunOutput, RunResult, Splits,
    RESULTS_HEADER,
};
pub use model::{shannon_entropy, QbcConfig, QbcModel, TrainReport};
pub use sparse::CsrMatrix;
pub use stats::{regularized_incomplete_beta, welch_t_test, WelchTest};
pub use strategy::{
    combine_scores, select_batch_diffusal, select_batch_entropy, select_coreset, select_degree,
    select_random, BatchSelection, CombineMode, LabeledPool, ScoreBreakdown, SelectionContext,
    StrategyConfig, StrategyKind,
};
pub use synth::{two_block, two_block_noisy, write_dataset_dir, SynthDataset};
