//! The experiment engine: held-out split, balancing over several sampling
//! runs, precision-driven grid search with k-fold cross-validation, test
//! evaluation, report assembly, and tagging of unresolved issues.

mod apply;
mod benchmark;
mod grid;
mod metrics;
mod split;

pub use apply::{tag_issues, train_model, write_tags_csv, Tag};
pub use benchmark::{
    dataset_digest, run_benchmark, run_benchmark_traced, BenchmarkConfig, BenchmarkReport, ClassifierRow,
    QuestionKind, RunResult, Section, Stage, TraceEvent, REPORT_FORMAT,
};
pub use grid::{fold_seed, grid_search, CvResult, ForestGrid, GridConfig, GridSearch, NbGrid, SvmGrid, TreeGrid};
pub use metrics::{evaluate, Metric, Metrics};
pub use split::{balance, kfold, stratified_split, test_quota, BalancedSample, Fold, Split, SplitPlan};
