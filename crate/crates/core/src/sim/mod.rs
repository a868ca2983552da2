//! Experiment orchestration: broadcast, local training, aggregation and
//! evaluation, round after round.

mod config;
mod eval;
mod run;

pub use config::{DatasetSource, ExperimentConfig, ModelKind};
pub use eval::{evaluate, krum_trace, TracePoint};
pub use run::{load_datasets, run_experiment, run_experiment_with, ExperimentResult, RoundRecord};
