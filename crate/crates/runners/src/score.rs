//! Regret estimators for level scoring.

use ued_agents::UpdateBatch;

use crate::buffer::{PlrConfig, ScoreFn};
use crate::error::RunnerError;

/// Positive value loss: mean of `max(A_t, 0)`.
pub fn score_pvl(advantages: &[f32]) -> Result<f32, RunnerError> {
    if advantages.is_empty() {
        return Err(RunnerError::EmptySegment);
    }
    Ok(advantages.iter().map(|a| a.max(0.0)).sum::<f32>() / advantages.len() as f32)
}

/// Maximum Monte Carlo regret: mean of `max_return - V(s_t)`.
pub fn score_maxmc(values: &[f32], max_return: f32) -> f32 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| max_return - v).sum::<f32>() / values.len() as f32
}

/// Returns of the episodes completed in a lane's segment. The optional
/// discount weights rewards by `gamma^k` from the start of each episode.
pub fn episode_returns(rewards: &[f32], dones: &[bool], gamma: Option<f32>) -> Vec<f32> {
    let mut out = Vec::new();
    let (mut ret, mut w) = (0.0f32, 1.0f32);
    for (&r, &d) in rewards.iter().zip(dones) {
        ret += w * r;
        if let Some(g) = gamma {
            w *= g;
        }
        if d {
            out.push(ret);
            ret = 0.0;
            w = 1.0;
        }
    }
    out
}

/// Max-minus-mean return across a population.
pub fn population_regret(returns: &[f32]) -> f32 {
    if returns.is_empty() {
        return 0.0;
    }
    let max = returns.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mean = returns.iter().sum::<f32>() / returns.len() as f32;
    max - mean
}

/// `(score, max_return)` per lane. `prior_max` carries the running maximum
/// return of levels already in the buffer. Scores are clamped at zero.
pub fn score_lanes(
    batch: &UpdateBatch,
    prior_max: &[Option<f32>],
    cfg: &PlrConfig,
    gamma: f32,
) -> Result<Vec<(f32, f32)>, RunnerError> {
    let traj = &batch.traj;
    (0..traj.lanes)
        .map(|b| {
            let rewards = traj.lane_series(&traj.rewards, b);
            let dones = traj.lane_series(&traj.dones, b);
            let returns = episode_returns(&rewards, &dones, cfg.discounted_max_return.then_some(gamma));
            let seen = returns.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let max_return = match prior_max[b] {
                Some(p) => p.max(seen),
                None if returns.is_empty() => 0.0,
                None => seen,
            };
            let score = match cfg.score_fn {
                ScoreFn::MaxMc => score_maxmc(&traj.lane_series(&traj.values, b), max_return),
                ScoreFn::Pvl => score_pvl(&traj.lane_series(&batch.advantages, b))?,
            };
            Ok((score.max(0.0), max_return))
        })
        .collect()
}
