//! Zero-shot evaluation on fixed levels.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use ued_agents::network::select_action;
use ued_agents::{ActionMode, AgentError, Params, RecurrentPolicy};
use ued_core::maze::assets::{params_for, test_level, test_levels};
use ued_core::maze::{decode_level, AMaze, MazeLevel, StaticParams};
use ued_core::{BatchEnv, BatchObs, BatchShape, Key};

use crate::error::ExperimentError;

/// Something that picks one action per lane.
pub trait ActionPolicy {
    /// `resets[i]` marks the first step of an episode in lane `i`.
    fn act(&mut self, obs: &BatchObs, resets: &[bool]) -> Result<Vec<usize>, AgentError>;
}

/// Argmax actions of the recurrent policy.
pub struct GreedyPolicy<'a> {
    net: &'a RecurrentPolicy,
    params: &'a Params<f32>,
    hidden: Array2<f32>,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(net: &'a RecurrentPolicy, params: &'a Params<f32>) -> Self {
        GreedyPolicy { net, params, hidden: Array2::zeros((0, net.hidden_dim())) }
    }
}

impl ActionPolicy for GreedyPolicy<'_> {
    fn act(&mut self, obs: &BatchObs, resets: &[bool]) -> Result<Vec<usize>, AgentError> {
        if self.hidden.nrows() != obs.len() {
            self.hidden = Array2::zeros((obs.len(), self.net.hidden_dim()));
        }
        let (logits, _) = self.net.step(self.params, obs, resets, &mut self.hidden)?;
        Ok((0..obs.len()).map(|i| select_action(logits.row(i), ActionMode::Greedy, Key::new(0)).0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub name: String,
    pub episodes: usize,
    pub solved_rate: f64,
    pub mean_return: f64,
    pub mean_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_episodes: usize,
    /// Mean over levels of the per-level rates.
    pub solved_rate: f64,
    pub mean_return: f64,
    pub levels: Vec<LevelResult>,
}

/// Plays `episodes` episodes on every level, one lane per episode.
pub fn evaluate(
    policy: &mut dyn ActionPolicy,
    levels: &[(String, MazeLevel)],
    base: &StaticParams,
    episodes: usize,
) -> Result<EvalReport, ExperimentError> {
    if episodes == 0 {
        return Err(ExperimentError::Config("episodes per level must be >= 1".into()));
    }
    let mut results = Vec::with_capacity(levels.len());
    for (name, level) in levels {
        let env = AMaze::new(params_for(level, base))?;
        let benv = BatchEnv::new(env, BatchShape::new(1, episodes, 1)?);
        let (mut state, mut obs) = benv.reset_to_levels(std::slice::from_ref(level))?;
        let mut resets = vec![true; episodes];
        let mut done = vec![false; episodes];
        let mut ret = vec![0f64; episodes];
        let mut len = vec![0usize; episodes];
        let mut solved = vec![false; episodes];
        // Finished lanes keep stepping on auto-reset copies; their results are frozen.
        for t in 0..=base.max_episode_steps {
            if done.iter().all(|&d| d) {
                break;
            }
            let actions = policy.act(&obs, &resets)?;
            let step = benv.step(Key::new(t as u64), &mut state, &actions)?;
            for i in 0..episodes {
                if done[i] {
                    continue;
                }
                ret[i] += step.rewards[i] as f64;
                len[i] += 1;
                if step.dones[i] {
                    done[i] = true;
                    solved[i] = step.infos[i].get("solved").is_some_and(|&s| s > 0.5);
                }
            }
            resets = step.dones;
            obs = step.obs;
        }
        let n = episodes as f64;
        results.push(LevelResult {
            name: name.clone(),
            episodes,
            solved_rate: solved.iter().filter(|&&s| s).count() as f64 / n,
            mean_return: ret.iter().sum::<f64>() / n,
            mean_length: len.iter().sum::<usize>() as f64 / n,
        });
    }
    let k = results.len().max(1) as f64;
    Ok(EvalReport {
        n_episodes: episodes * results.len(),
        solved_rate: results.iter().map(|r| r.solved_rate).sum::<f64>() / k,
        mean_return: results.iter().map(|r| r.mean_return).sum::<f64>() / k,
        levels: results,
    })
}

/// Resolves shipped level names and level file paths. An empty list yields
/// every shipped test level.
pub fn load_levels(specs: &[String], base: &StaticParams) -> Result<Vec<(String, MazeLevel)>, ExperimentError> {
    if specs.is_empty() {
        return Ok(test_levels().into_iter().map(|(n, l)| (n.to_string(), l)).collect());
    }
    specs.iter().map(|s| load_level(s, base)).collect()
}

pub fn load_level(spec: &str, base: &StaticParams) -> Result<(String, MazeLevel), ExperimentError> {
    if let Some(l) = test_level(spec) {
        return Ok((spec.to_string(), l));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::file(path, e))?;
    let (h, w) = grid_size(&text);
    let params = StaticParams { height: h, width: w, ..base.clone() };
    let level = decode_level(&text, &params).map_err(|e| ExperimentError::file(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
    Ok((name, level))
}

fn grid_size(text: &str) -> (usize, usize) {
    let rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty()).collect();
    (rows.len(), rows.first().map_or(0, |r| r.chars().count()))
}
