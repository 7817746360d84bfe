//! Experiment orchestration: configuration, data generation, the training
//! loop, evaluation and the command-line interface.

mod batch;
pub mod cli;
mod config;
mod data;
mod eval;
mod metrics;
mod selftest;
mod train;

pub use batch::sample_minibatch;
pub use config::TrainConfig;
pub use data::{
    derive_seed, generate, generate_test, generate_train, grid2, samples_from_dataset, samples_to_dataset,
    test_queries, BenchmarkData,
};
pub use eval::{evaluate, predict, recover_radius, summarize, EvalSummary, PredictionGrid};
pub use metrics::{read_metrics_csv, save_metrics, write_metrics_csv, MetricsRecord, METRICS_HEADER};
pub use selftest::{run_selftest, Check};
pub use train::{
    batch_rng, checkpoint_archive, full_loss, init_params, train, training_pools, TrainResult, CHECKPOINT_FILE,
    METRICS_FILE,
};
