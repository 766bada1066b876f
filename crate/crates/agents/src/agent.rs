//! PPO agents and populations of independent agents.

use std::collections::BTreeMap;

use ued_core::{BatchEnv, BatchState, Environment, Key};

use crate::checkpoint::NamedTensor;
use crate::error::AgentError;
use crate::model::{ModelSpec, Params};
use crate::network::{ActionMode, RecurrentPolicy};
use crate::ppo::{ppo_update, AdamState, GradReducer, PpoConfig, UpdateBatch, UpdateStats};
use crate::rollout::{rollout, Carry, RolloutOutput};

/// Trainable state of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub params: Params<f32>,
    pub opt: AdamState,
}

impl AgentState {
    /// Parameters and Adam moments as `prefix/params/<name>`,
    /// `prefix/adam_m/<name>` and `prefix/adam_v/<name>`.
    pub fn to_tensors(&self, prefix: &str) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (group, data) in [("params", &self.params.data), ("adam_m", &self.opt.m), ("adam_v", &self.opt.v)] {
            for (name, slot) in self.params.layout.entries() {
                out.push(NamedTensor::new(
                    format!("{prefix}/{group}/{name}"),
                    vec![slot.rows, slot.cols],
                    data[slot.range()].to_vec(),
                ));
            }
        }
        out
    }

    /// Inverse of [`AgentState::to_tensors`]; `adam_step` is stored elsewhere.
    pub fn from_tensors(
        spec: &ModelSpec,
        prefix: &str,
        tensors: &BTreeMap<&str, &NamedTensor>,
        adam_step: u64,
    ) -> Result<AgentState, AgentError> {
        let layout = spec.layout();
        let mut groups = [vec![0f32; layout.total], vec![0f32; layout.total], vec![0f32; layout.total]];
        for (g, group) in ["params", "adam_m", "adam_v"].iter().enumerate() {
            for (name, slot) in layout.entries() {
                let key = format!("{prefix}/{group}/{name}");
                let t = tensors
                    .get(key.as_str())
                    .ok_or_else(|| AgentError::Checkpoint(format!("missing tensor {key}")))?;
                if t.shape != [slot.rows, slot.cols] {
                    return Err(AgentError::Checkpoint(format!(
                        "tensor {key} has shape {:?}, model expects [{}, {}]",
                        t.shape, slot.rows, slot.cols
                    )));
                }
                groups[g][slot.range()].copy_from_slice(&t.data);
            }
        }
        let [p, m, v] = groups;
        let params = Params { layout, data: p };
        if !params.is_finite() {
            return Err(AgentError::Checkpoint(format!("non-finite parameters under {prefix}")));
        }
        Ok(AgentState { params, opt: AdamState { m, v, step: adam_step } })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoAgent {
    pub net: RecurrentPolicy,
    pub cfg: PpoConfig,
}

impl PpoAgent {
    pub fn new(spec: ModelSpec, cfg: PpoConfig) -> Result<Self, AgentError> {
        cfg.validate()?;
        Ok(PpoAgent { net: RecurrentPolicy::new(spec), cfg })
    }

    pub fn init(&self, key: Key) -> AgentState {
        let params = self.net.init(key);
        let opt = AdamState::new(params.data.len());
        AgentState { params, opt }
    }

    pub fn batch(&self, traj: crate::trajectory::TrajectoryBatch) -> UpdateBatch {
        UpdateBatch::new(traj, self.cfg.gamma, self.cfg.gae_lambda)
    }

    pub fn update(
        &self,
        state: &mut AgentState,
        batch: &UpdateBatch,
        key: Key,
        reducer: &dyn GradReducer,
    ) -> Result<UpdateStats, AgentError> {
        ppo_update(&self.net, &mut state.params, &mut state.opt, batch, &self.cfg, key, reducer)
    }
}

/// `n` independent copies of an agent sharing hyperparameters. Member `i`
/// derives its keys as `key.fold_in(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPop {
    pub agent: PpoAgent,
    pub n: usize,
}

impl AgentPop {
    pub fn new(agent: PpoAgent, n: usize) -> Result<Self, AgentError> {
        if n == 0 {
            return Err(AgentError::Config("population size must be >= 1".into()));
        }
        Ok(AgentPop { agent, n })
    }

    pub fn init(&self, key: Key) -> Vec<AgentState> {
        (0..self.n).map(|i| self.agent.init(key.fold_in(i as u64))).collect()
    }

    /// Rollout over a batch whose agent axis has `n` entries.
    #[allow(clippy::too_many_arguments)]
    pub fn rollout<E: Environment>(
        &self,
        key: Key,
        members: &[AgentState],
        benv: &BatchEnv<E>,
        state: &mut BatchState<E::State>,
        carry: Carry,
        length: usize,
        mode: ActionMode,
    ) -> Result<RolloutOutput, AgentError> {
        if members.len() != self.n {
            return Err(AgentError::Shape { what: "population members", expected: self.n, got: members.len() });
        }
        let params: Vec<_> = members.iter().map(|m| &m.params).collect();
        rollout(key, &self.agent.net, &params, benv, state, carry, length, mode)
    }

    pub fn update(
        &self,
        members: &mut [AgentState],
        batches: &[UpdateBatch],
        key: Key,
        reducer: &dyn GradReducer,
    ) -> Result<Vec<UpdateStats>, AgentError> {
        if members.len() != self.n || batches.len() != self.n {
            return Err(AgentError::Shape { what: "population batches", expected: self.n, got: batches.len() });
        }
        members
            .iter_mut()
            .zip(batches)
            .enumerate()
            .map(|(i, (m, b))| self.agent.update(m, b, key.fold_in(i as u64), reducer))
            .collect()
    }
}
