//! Cross-validation protocol, metrics, significance testing and synthetic
//! corpora.

pub mod bootstrap;
pub mod folds;
pub mod harness;
pub mod metrics;
pub mod report;
pub mod subsets;
pub mod synth;

pub use crate::aggregation::mask_features;
pub use bootstrap::{bootstrap_compare, BootstrapOutcome, SIGNIFICANCE};
pub use folds::{make_folds, FoldSpec};
pub use harness::{prepare_documents, run_experiment, run_fold, ExperimentConfig, FoldData, PreparedDoc};
pub use metrics::{micro_metrics, Metrics};
pub use report::{summary_table, write_reports, EvalReport};
pub use subsets::{feature_subsets, search_order, SUBSET_COUNT};
pub use synth::{generate_synthetic_corpus, SignalSpec, SynthParams};
