use serde::{Deserialize, Serialize};

use crate::error::EnvError;

/// Parameters fixed when the environment is built.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticParams {
    /// Grid height including the border walls.
    pub height: usize,
    /// Grid width including the border walls.
    pub width: usize,
    pub max_episode_steps: usize,
    pub agent_view_size: usize,
    pub wall_budget: usize,
    pub see_through_walls: bool,
}

impl Default for StaticParams {
    fn default() -> Self {
        StaticParams {
            height: 13,
            width: 13,
            max_episode_steps: 250,
            agent_view_size: 5,
            wall_budget: 60,
            see_through_walls: true,
        }
    }
}

impl StaticParams {
    pub fn interior_cells(&self) -> usize {
        self.height.saturating_sub(2) * self.width.saturating_sub(2)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidParams(m));
        if self.height < 3 || self.width < 3 {
            return bad(format!("grid must be at least 3x3, got {}x{}", self.height, self.width));
        }
        if self.height > 255 || self.width > 255 {
            return bad(format!("grid larger than 255 in a dimension: {}x{}", self.height, self.width));
        }
        if self.agent_view_size < 3 || self.agent_view_size % 2 == 0 {
            return bad(format!("agent_view_size must be odd and >= 3, got {}", self.agent_view_size));
        }
        if self.max_episode_steps == 0 {
            return bad("max_episode_steps must be >= 1".into());
        }
        let interior = self.interior_cells();
        if interior < 2 || self.wall_budget > interior - 2 {
            return bad(format!(
                "wall_budget {} leaves fewer than 2 free cells in {} interior cells",
                self.wall_budget, interior
            ));
        }
        Ok(())
    }
}
