//! Rollout storage, time-major: index `t * lanes + b`.

use ued_core::BatchObs;

use crate::error::AgentError;
use crate::network::SeqInput;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBatch {
    pub len: usize,
    pub lanes: usize,
    pub n_tokens: usize,
    pub n_scalars: usize,
    pub hidden_dim: usize,
    pub tokens: Vec<u8>,
    pub aux: Vec<u8>,
    pub scalars: Vec<f32>,
    /// Hidden state is zeroed before step `t` on lane `b`.
    pub resets: Vec<bool>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f32>,
    pub values: Vec<f32>,
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
    /// `[lanes, hidden_dim]` carry at the start of the segment.
    pub init_hidden: Vec<f32>,
    /// Value estimate of the observation following the last step.
    pub last_values: Vec<f32>,
}

impl TrajectoryBatch {
    pub fn with_capacity(len: usize, lanes: usize, n_tokens: usize, n_scalars: usize, hidden_dim: usize) -> Self {
        let n = len * lanes;
        TrajectoryBatch {
            len: 0,
            lanes,
            n_tokens,
            n_scalars,
            hidden_dim,
            tokens: Vec::with_capacity(n * n_tokens),
            aux: Vec::with_capacity(n),
            scalars: Vec::with_capacity(n * n_scalars),
            resets: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            init_hidden: vec![0.0; lanes * hidden_dim],
            last_values: vec![0.0; lanes],
        }
    }

    pub fn steps(&self) -> usize {
        self.len * self.lanes
    }

    /// Appends one time step; `obs` must have `lanes` lanes.
    #[allow(clippy::too_many_arguments)]
    pub fn push_step(
        &mut self,
        obs: &BatchObs,
        resets: &[bool],
        actions: &[usize],
        log_probs: &[f32],
        values: &[f32],
        rewards: &[f32],
        dones: &[bool],
    ) -> Result<(), AgentError> {
        for (what, got) in [
            ("observation lanes", obs.len()),
            ("resets", resets.len()),
            ("actions", actions.len()),
            ("log_probs", log_probs.len()),
            ("values", values.len()),
            ("rewards", rewards.len()),
            ("dones", dones.len()),
        ] {
            if got != self.lanes {
                return Err(AgentError::Shape { what, expected: self.lanes, got });
            }
        }
        self.tokens.extend_from_slice(&obs.tokens);
        self.aux.extend_from_slice(&obs.aux);
        self.scalars.extend_from_slice(&obs.scalars);
        self.resets.extend_from_slice(resets);
        self.actions.extend_from_slice(actions);
        self.log_probs.extend_from_slice(log_probs);
        self.values.extend_from_slice(values);
        self.rewards.extend_from_slice(rewards);
        self.dones.extend_from_slice(dones);
        self.len += 1;
        Ok(())
    }

    pub fn input(&self) -> SeqInput<'_> {
        SeqInput {
            len: self.len,
            lanes: self.lanes,
            tokens: &self.tokens,
            aux: &self.aux,
            scalars: &self.scalars,
            resets: &self.resets,
        }
    }

    /// Gathers the given lanes (in order) into a new batch.
    pub fn select_lanes(&self, lanes: &[usize]) -> TrajectoryBatch {
        let mut out = TrajectoryBatch::with_capacity(self.len, lanes.len(), self.n_tokens, self.n_scalars, self.hidden_dim);
        out.len = self.len;
        let (nt, ns, h) = (self.n_tokens, self.n_scalars, self.hidden_dim);
        for t in 0..self.len {
            for &b in lanes {
                let i = t * self.lanes + b;
                out.tokens.extend_from_slice(&self.tokens[i * nt..(i + 1) * nt]);
                out.aux.push(self.aux[i]);
                out.scalars.extend_from_slice(&self.scalars[i * ns..(i + 1) * ns]);
                out.resets.push(self.resets[i]);
                out.actions.push(self.actions[i]);
                out.log_probs.push(self.log_probs[i]);
                out.values.push(self.values[i]);
                out.rewards.push(self.rewards[i]);
                out.dones.push(self.dones[i]);
            }
        }
        for (k, &b) in lanes.iter().enumerate() {
            out.init_hidden[k * h..(k + 1) * h].copy_from_slice(&self.init_hidden[b * h..(b + 1) * h]);
            out.last_values[k] = self.last_values[b];
        }
        out
    }

    /// Concatenates batches of equal length along the lane axis.
    pub fn concat_lanes(parts: &[&TrajectoryBatch]) -> Result<TrajectoryBatch, AgentError> {
        let first = parts.first().ok_or(AgentError::Shape { what: "trajectory parts", expected: 1, got: 0 })?;
        for p in parts {
            if p.len != first.len {
                return Err(AgentError::Shape { what: "trajectory length", expected: first.len, got: p.len });
            }
        }
        let lanes: usize = parts.iter().map(|p| p.lanes).sum();
        let mut out = TrajectoryBatch::with_capacity(first.len, lanes, first.n_tokens, first.n_scalars, first.hidden_dim);
        out.len = first.len;
        out.init_hidden.clear();
        out.last_values.clear();
        let (nt, ns) = (first.n_tokens, first.n_scalars);
        for t in 0..first.len {
            for p in parts {
                let r = t * p.lanes..(t + 1) * p.lanes;
                out.tokens.extend_from_slice(&p.tokens[r.start * nt..r.end * nt]);
                out.aux.extend_from_slice(&p.aux[r.clone()]);
                out.scalars.extend_from_slice(&p.scalars[r.start * ns..r.end * ns]);
                out.resets.extend_from_slice(&p.resets[r.clone()]);
                out.actions.extend_from_slice(&p.actions[r.clone()]);
                out.log_probs.extend_from_slice(&p.log_probs[r.clone()]);
                out.values.extend_from_slice(&p.values[r.clone()]);
                out.rewards.extend_from_slice(&p.rewards[r.clone()]);
                out.dones.extend_from_slice(&p.dones[r]);
            }
        }
        for p in parts {
            out.init_hidden.extend_from_slice(&p.init_hidden);
            out.last_values.extend_from_slice(&p.last_values);
        }
        Ok(out)
    }

    /// Per-step values of lane `b`.
    pub fn lane_series<T: Copy>(&self, data: &[T], b: usize) -> Vec<T> {
        (0..self.len).map(|t| data[t * self.lanes + b]).collect()
    }
}
