//! Per-iteration metrics.

use serde::{Deserialize, Serialize};
use ued_agents::{EpisodeRecord, UpdateStats};
use ued_core::maze::{env_metrics, MazeLevel};

/// One JSON-lines record per iteration. Contains no wall-clock quantities so
/// that identical runs produce identical records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub env_steps: u64,
    pub mode: String,
    pub updated: bool,
    /// Episodes that ended inside this iteration's rollout. Return and solved
    /// rate average over these only.
    pub n_episodes: usize,
    pub mean_return: f64,
    pub solved_rate: f64,
    pub lanes_new: usize,
    pub lanes_replay: usize,
    pub lanes_mutant: usize,
    pub buffer_size: usize,
    pub buffer_mean_score: f64,
    pub buffer_max_score: f64,
    /// Levels the student trained on this iteration.
    pub mean_n_walls: f64,
    pub mean_shortest_path: f64,
    pub solvable_rate: f64,
    pub new_levels_shortest_path: Option<f64>,
    pub replay_levels_shortest_path: Option<f64>,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub entropy: Option<f64>,
    pub approx_kl: Option<f64>,
    pub grad_norm: Option<f64>,
    pub teacher_regret: Option<f64>,
    pub teacher_entropy: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelSummary {
    pub count: usize,
    pub mean_n_walls: f64,
    pub mean_shortest_path: f64,
    pub solvable_rate: f64,
}

pub fn summarize_levels<'a>(levels: impl IntoIterator<Item = &'a MazeLevel>) -> LevelSummary {
    let mut s = LevelSummary::default();
    for l in levels {
        let m = env_metrics(l);
        s.count += 1;
        s.mean_n_walls += m.n_walls as f64;
        s.mean_shortest_path += m.shortest_path_length as f64;
        s.solvable_rate += m.solvable as u8 as f64;
    }
    if s.count > 0 {
        let n = s.count as f64;
        s.mean_n_walls /= n;
        s.mean_shortest_path /= n;
        s.solvable_rate /= n;
    }
    s
}

impl IterationRecord {
    pub fn set_episodes(&mut self, episodes: &[EpisodeRecord]) {
        self.n_episodes = episodes.len();
        if !episodes.is_empty() {
            let n = episodes.len() as f64;
            self.mean_return = episodes.iter().map(|e| e.ret as f64).sum::<f64>() / n;
            self.solved_rate = episodes.iter().filter(|e| e.solved).count() as f64 / n;
        }
    }

    pub fn set_update(&mut self, u: &UpdateStats) {
        self.updated = true;
        self.policy_loss = Some(u.policy_loss);
        self.value_loss = Some(u.value_loss);
        self.entropy = Some(u.entropy);
        self.approx_kl = Some(u.approx_kl);
        self.grad_norm = Some(u.grad_norm);
    }

    pub fn set_levels(&mut self, s: &LevelSummary) {
        self.mean_n_walls = s.mean_n_walls;
        self.mean_shortest_path = s.mean_shortest_path;
        self.solvable_rate = s.solvable_rate;
    }
}
