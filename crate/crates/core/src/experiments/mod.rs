//! Replication harness: configuration, estimators, the LD closure runner,
//! checkpointed parallel execution and CSV persistence.

pub mod config;
pub mod harness;
pub mod ld;
pub mod outcome;
pub mod stats;

pub use config::{ClearingConfig, Estimator, ExperimentConfig, HitConfig, Mode};
pub use harness::{resume_experiment, run_experiment, theory_rows, RunOptions, RunStatus, RunSummary};
pub use ld::{run_ld_replica, Closure, ClosureParams, LdReplica};
pub use outcome::{read_outcomes_csv, render_estimates, EstimateRow, ReplicaOutcome, ESTIMATE_COLUMNS, OUTCOME_COLUMNS};
