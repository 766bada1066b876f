#![allow(dead_code)]

use std::path::Path;

use ued_agents::{ModelConfig, PpoConfig};
use ued_core::maze::StaticParams;
use ued_experiment::config::ExperimentConfig;
use ued_experiment::{preset, TrainOptions};
use ued_runners::RunnerKind;

/// A run small enough to take well under a second per iteration.
pub fn tiny(kind: RunnerKind, total: u64) -> ExperimentConfig {
    let mut c = preset(kind);
    c.env = StaticParams { height: 7, width: 7, max_episode_steps: 20, agent_view_size: 3, wall_budget: 10, ..Default::default() };
    c.model = ModelConfig { embed_dim: 4, aux_dim: 2, encoder_dim: 16, hidden_dim: 16 };
    c.ppo = PpoConfig { epochs: 1, lr: 3e-4, ..c.ppo };
    c.n_envs = 4;
    c.rollout_length = 16;
    c.plr.buffer_size = 32;
    c.accel.n_mutations = 2;
    c.accel.subsample_size = 2;
    c.paired.n_students = 2;
    c.total_updates = total;
    c.eval_interval = 0;
    c.checkpoint_interval = 0;
    c.seed = 3;
    c.eval.levels = vec!["SixteenRooms".into()];
    c.eval.episodes_per_level = 2;
    c
}

pub fn opts(root: &Path) -> TrainOptions {
    TrainOptions { output_root: root.to_path_buf(), stop_after: None, quiet: true }
}
