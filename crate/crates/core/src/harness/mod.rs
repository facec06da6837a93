//! Run orchestration, metrics export and checkpoints.

pub mod checkpoint;
pub mod eval;
pub mod metrics;
pub mod run;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use eval::{load_policy, policy_by_name, run_eval, run_eval_with, POLICY_NAMES};
pub use metrics::{
    export_metrics, metrics_csv, moving_average, EpisodeAccumulator, EpisodeMetrics, CSV_HEADER,
};
pub use run::{run_policy_eval, run_train, run_train_seeds, write_manifest};
