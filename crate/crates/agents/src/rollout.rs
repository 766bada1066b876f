//! Collecting experience from batched environments.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use ued_core::{BatchEnv, BatchObs, BatchState, Environment, Key};

use crate::error::AgentError;
use crate::model::Params;
use crate::network::{select_action, ActionMode, RecurrentPolicy, SeqInput};
use crate::trajectory::TrajectoryBatch;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub lane: usize,
    #[serde(rename = "return")]
    pub ret: f32,
    pub length: usize,
    pub solved: bool,
}

/// Per-lane recurrent carry between rollout segments.
#[derive(Clone, Debug, PartialEq)]
pub struct Carry {
    pub obs: BatchObs,
    pub hidden: Array2<f32>,
    /// Hidden state must be zeroed before the next step.
    pub resets: Vec<bool>,
}

impl Carry {
    /// Start of fresh episodes on every lane.
    pub fn fresh(obs: BatchObs, hidden_dim: usize) -> Self {
        let n = obs.len();
        Carry { obs, hidden: Array2::zeros((n, hidden_dim)), resets: vec![true; n] }
    }
}

#[derive(Clone, Debug)]
pub struct RolloutOutput {
    /// One trajectory per population member, over that member's lanes.
    pub trajs: Vec<TrajectoryBatch>,
    /// Episodes completed during the segment, lanes indexed globally.
    pub episodes: Vec<EpisodeRecord>,
    pub carry: Carry,
}

fn lane_input<'a>(obs: &'a BatchObs, resets: &'a [bool], lo: usize, hi: usize) -> SeqInput<'a> {
    SeqInput {
        len: 1,
        lanes: hi - lo,
        tokens: &obs.tokens[lo * obs.n_tokens..hi * obs.n_tokens],
        aux: &obs.aux[lo..hi],
        scalars: &obs.scalars[lo * obs.n_scalars..hi * obs.n_scalars],
        resets: &resets[lo..hi],
    }
}

/// Runs `length` steps on every lane. Lanes of agent `a` (per the batch
/// shape) act with `members[a]`. Episodes continue through the environment's
/// own reset-on-done handling; hidden states are zeroed at boundaries.
#[allow(clippy::too_many_arguments)]
pub fn rollout<E: Environment>(
    key: Key,
    net: &RecurrentPolicy,
    members: &[&Params<f32>],
    benv: &BatchEnv<E>,
    state: &mut BatchState<E::State>,
    carry: Carry,
    length: usize,
    mode: ActionMode,
) -> Result<RolloutOutput, AgentError> {
    let shape = benv.shape();
    if members.len() != shape.n_agents {
        return Err(AgentError::Shape { what: "population members", expected: shape.n_agents, got: members.len() });
    }
    if length == 0 {
        return Err(AgentError::Config("rollout length must be >= 1".into()));
    }
    let n = shape.total();
    let per = shape.inner();
    let h = net.hidden_dim();
    if carry.obs.len() != n || carry.hidden.nrows() != n || carry.resets.len() != n {
        return Err(AgentError::Shape { what: "rollout carry lanes", expected: n, got: carry.obs.len() });
    }
    let spec = net.spec().obs;
    let Carry { mut obs, mut hidden, mut resets } = carry;
    let mut trajs: Vec<TrajectoryBatch> = (0..members.len())
        .map(|m| {
            let mut t = TrajectoryBatch::with_capacity(length, per, spec.n_tokens, spec.n_scalars, h);
            t.init_hidden.copy_from_slice(hidden.slice(s![m * per..(m + 1) * per, ..]).as_slice().unwrap());
            t
        })
        .collect();
    let mut running = vec![(0.0f32, 0usize); n];
    let mut episodes = Vec::new();
    let mut actions = vec![0usize; n];
    let mut log_probs = vec![0f32; n];
    let mut values = vec![0f32; n];

    for t in 0..length {
        let kt = key.fold_in(t as u64);
        let ka = kt.fold_in(0);
        for (m, params) in members.iter().enumerate() {
            let (lo, hi) = (m * per, (m + 1) * per);
            let input = lane_input(&obs, &resets, lo, hi);
            let cache = net.forward(params, &input, hidden.slice(s![lo..hi, ..]))?;
            hidden.slice_mut(s![lo..hi, ..]).assign(&cache.final_hidden);
            for k in 0..per {
                let i = lo + k;
                let (a, lp) = select_action(cache.logits.row(k), mode, ka.fold_in(i as u64));
                actions[i] = a;
                log_probs[i] = lp;
                values[i] = cache.values[k];
            }
        }
        let step = benv.step(kt.fold_in(1), state, &actions)?;
        for (m, traj) in trajs.iter_mut().enumerate() {
            let (lo, hi) = (m * per, (m + 1) * per);
            let sub = obs.select(&(lo..hi).collect::<Vec<_>>());
            traj.push_step(
                &sub,
                &resets[lo..hi],
                &actions[lo..hi],
                &log_probs[lo..hi],
                &values[lo..hi],
                &step.rewards[lo..hi],
                &step.dones[lo..hi],
            )?;
        }
        for i in 0..n {
            running[i].0 += step.rewards[i];
            running[i].1 += 1;
            if step.dones[i] {
                let solved = step.infos[i].get("solved").is_some_and(|&s| s > 0.5);
                episodes.push(EpisodeRecord { lane: i, ret: running[i].0, length: running[i].1, solved });
                running[i] = (0.0, 0);
            }
        }
        resets = step.dones;
        obs = step.obs;
    }

    for (m, params) in members.iter().enumerate() {
        let (lo, hi) = (m * per, (m + 1) * per);
        let input = lane_input(&obs, &resets, lo, hi);
        let cache = net.forward(params, &input, hidden.slice(s![lo..hi, ..]))?;
        trajs[m].last_values.copy_from_slice(cache.values.as_slice().unwrap());
    }
    Ok(RolloutOutput { trajs, episodes, carry: Carry { obs, hidden, resets } })
}

/// Plays until every lane finishes its first episode (or `max_steps` pass)
/// with a single parameter set and returns that episode per lane.
#[allow(clippy::too_many_arguments)]
pub fn run_episodes<E: Environment>(
    key: Key,
    net: &RecurrentPolicy,
    params: &Params<f32>,
    benv: &BatchEnv<E>,
    state: &mut BatchState<E::State>,
    obs: BatchObs,
    mode: ActionMode,
    max_steps: usize,
) -> Result<Vec<Option<EpisodeRecord>>, AgentError> {
    let n = benv.lanes();
    let mut carry = Carry::fresh(obs, net.hidden_dim());
    let mut out = vec![None; n];
    let mut running = vec![(0.0f32, 0usize); n];
    let mut actions = vec![0usize; n];
    for t in 0..max_steps {
        if out.iter().all(Option::is_some) {
            break;
        }
        let kt = key.fold_in(t as u64);
        let (logits, _) = net.step(params, &carry.obs, &carry.resets, &mut carry.hidden)?;
        for (i, a) in actions.iter_mut().enumerate() {
            *a = select_action(logits.row(i), mode, kt.fold_in(0).fold_in(i as u64)).0;
        }
        let step = benv.step(kt.fold_in(1), state, &actions)?;
        for i in 0..n {
            if out[i].is_some() {
                continue;
            }
            running[i].0 += step.rewards[i];
            running[i].1 += 1;
            if step.dones[i] {
                let solved = step.infos[i].get("solved").is_some_and(|&s| s > 0.5);
                out[i] = Some(EpisodeRecord { lane: i, ret: running[i].0, length: running[i].1, solved });
            }
        }
        carry.resets = step.dones;
        carry.obs = step.obs;
    }
    Ok(out)
}
