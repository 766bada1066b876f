//! AMaze: a partially observable goal-reaching maze on a rectangular grid.
//!
//! The student acts with `{turn_left, turn_right, forward}` and sees an
//! egocentric `agent_view_size` square window. Levels are wall bitmaps plus an
//! agent pose and a goal cell; they can be sampled, designed step by step by a
//! teacher ([`MazeDesigner`]), mutated, measured and serialized to text.

pub mod apsp;
pub mod assets;
mod env;
pub mod format;
pub mod generate;
pub mod level;
pub mod metrics;
pub mod mutate;
pub mod observe;
pub mod params;
pub mod teacher;

pub use apsp::{bfs_apsp, seidel_apsp, DistanceMatrix};
pub use env::{compute_reward, transition, AMaze, MazeAction, MazeState};
pub use format::{decode_level, encode_level};
pub use generate::sample_random_level;
pub use level::{Cell, Direction, MazeLevel};
pub use metrics::{env_metrics, EnvMetrics};
pub use mutate::{mutate_level, DEFAULT_GOAL_RELOCATION_PROB};
pub use observe::{observe, MazeObservation, Tile, TileGrid};
pub use params::StaticParams;
pub use teacher::{decode_teacher_observation, teacher_step, DesignPhase, MazeDesigner, TeacherState};
