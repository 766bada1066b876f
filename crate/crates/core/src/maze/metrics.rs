use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::apsp::seidel_apsp;
use super::level::MazeLevel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvMetrics {
    /// Interior walls only.
    pub n_walls: usize,
    /// Agent-to-goal distance, 0 when unreachable.
    pub shortest_path_length: u32,
    pub solvable: bool,
    /// Fraction of interior cells that are not walls.
    pub passable_ratio: f64,
}

impl EnvMetrics {
    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("n_walls", self.n_walls as f64),
            ("shortest_path_length", self.shortest_path_length as f64),
            ("solvable", self.solvable as u8 as f64),
            ("passable_ratio", self.passable_ratio),
        ])
    }
}

pub fn env_metrics(level: &MazeLevel) -> EnvMetrics {
    let n_walls = level.n_interior_walls();
    let interior = (level.height - 2) * (level.width - 2);
    let apsp = seidel_apsp(level.height, level.width, &level.walls);
    let shortest_path_length = apsp.distance(level.agent_pos, level.goal_pos).unwrap_or(0);
    EnvMetrics {
        n_walls,
        shortest_path_length,
        solvable: shortest_path_length > 0,
        passable_ratio: (interior - n_walls) as f64 / interior as f64,
    }
}
