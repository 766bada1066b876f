//! Experiment orchestration: layered configs, a component registry, the
//! training loop with evaluation and checkpoints, and benchmarks.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod levels;
pub mod registry;
pub mod train;

pub use config::{preset, resolve, EvalConfig, ExperimentConfig};
pub use error::ExperimentError;
pub use eval::{evaluate, ActionPolicy, EvalReport, GreedyPolicy, LevelResult};
pub use registry::{Registry, RegistryError};
pub use train::{train, MetricLine, TrainOptions, TrainSummary};
