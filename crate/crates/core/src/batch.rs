//! Hierarchical batching over (agents, evaluations, environments).
//!
//! Lanes are laid out agent-major: lane `a * n_evals * n_envs + e * n_envs + j`.
//! Every batched call derives lane `i`'s key as `key.fold_in(i)`, so a batch is
//! elementwise identical to single-environment calls made with those keys.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, Extras, Info, ObsSpec, Observation, Upomdp};
use crate::error::EnvError;
use crate::rng::Key;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchShape {
    pub n_agents: usize,
    pub n_evals: usize,
    pub n_envs: usize,
}

impl BatchShape {
    pub fn new(n_agents: usize, n_evals: usize, n_envs: usize) -> Result<Self, EnvError> {
        if n_agents == 0 || n_evals == 0 || n_envs == 0 {
            return Err(EnvError::InvalidParams(format!(
                "batch dimensions must be >= 1, got ({n_agents}, {n_evals}, {n_envs})"
            )));
        }
        Ok(BatchShape { n_agents, n_evals, n_envs })
    }

    pub fn envs(n_envs: usize) -> Result<Self, EnvError> {
        Self::new(1, 1, n_envs)
    }

    /// Flattened per-agent batch size.
    pub fn inner(&self) -> usize {
        self.n_evals * self.n_envs
    }

    pub fn total(&self) -> usize {
        self.n_agents * self.inner()
    }

    pub fn lane(&self, agent: usize, eval: usize, env: usize) -> usize {
        agent * self.inner() + eval * self.n_envs + env
    }
}

/// Observations for a batch of lanes, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchObs {
    pub n_tokens: usize,
    pub n_scalars: usize,
    pub tokens: Vec<u8>,
    pub aux: Vec<u8>,
    pub scalars: Vec<f32>,
}

impl BatchObs {
    pub fn zeros(spec: ObsSpec, lanes: usize) -> Self {
        BatchObs {
            n_tokens: spec.n_tokens,
            n_scalars: spec.n_scalars,
            tokens: vec![0; lanes * spec.n_tokens],
            aux: vec![0; lanes],
            scalars: vec![0.0; lanes * spec.n_scalars],
        }
    }

    pub fn from_observations(spec: ObsSpec, obs: &[Observation]) -> Self {
        let mut out = Self::zeros(spec, obs.len());
        for (i, o) in obs.iter().enumerate() {
            out.set_lane(i, o);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.aux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aux.is_empty()
    }

    pub fn lane(&self, i: usize) -> Observation {
        Observation {
            tokens: self.tokens[i * self.n_tokens..(i + 1) * self.n_tokens].to_vec(),
            aux: self.aux[i],
            scalars: self.scalars[i * self.n_scalars..(i + 1) * self.n_scalars].to_vec(),
        }
    }

    pub fn set_lane(&mut self, i: usize, obs: &Observation) {
        self.tokens[i * self.n_tokens..(i + 1) * self.n_tokens].copy_from_slice(&obs.tokens);
        self.aux[i] = obs.aux;
        self.scalars[i * self.n_scalars..(i + 1) * self.n_scalars].copy_from_slice(&obs.scalars);
    }

    /// Lanes `lanes` in the given order.
    pub fn select(&self, lanes: &[usize]) -> BatchObs {
        let mut out = BatchObs {
            n_tokens: self.n_tokens,
            n_scalars: self.n_scalars,
            tokens: Vec::with_capacity(lanes.len() * self.n_tokens),
            aux: Vec::with_capacity(lanes.len()),
            scalars: Vec::with_capacity(lanes.len() * self.n_scalars),
        };
        for &i in lanes {
            out.tokens.extend_from_slice(&self.tokens[i * self.n_tokens..(i + 1) * self.n_tokens]);
            out.aux.push(self.aux[i]);
            out.scalars.extend_from_slice(&self.scalars[i * self.n_scalars..(i + 1) * self.n_scalars]);
        }
        out
    }

    fn observe_lane<E: Environment>(&mut self, env: &E, i: usize, state: &E::State) {
        let (nt, ns) = (self.n_tokens, self.n_scalars);
        self.aux[i] = env.observe_into(state, &mut self.tokens[i * nt..(i + 1) * nt], &mut self.scalars[i * ns..(i + 1) * ns]);
    }
}

pub struct BatchState<S> {
    pub states: Vec<S>,
    pub extras: Vec<Extras>,
}

impl<S: Clone> Clone for BatchState<S> {
    fn clone(&self) -> Self {
        BatchState { states: self.states.clone(), extras: self.extras.clone() }
    }
}

impl<S> BatchState<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct BatchStep {
    pub obs: BatchObs,
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
    pub infos: Vec<Info>,
}

#[derive(Clone, Debug)]
pub struct BatchEnv<E> {
    env: E,
    shape: BatchShape,
}

impl<E: Environment> BatchEnv<E> {
    pub fn new(env: E, shape: BatchShape) -> Self {
        BatchEnv { env, shape }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn shape(&self) -> BatchShape {
        self.shape
    }

    pub fn lanes(&self) -> usize {
        self.shape.total()
    }

    pub fn reset(&self, key: Key) -> Result<(BatchState<E::State>, BatchObs), EnvError> {
        let n = self.lanes();
        let mut obs = BatchObs::zeros(self.env.obs_spec(), n);
        let mut states = Vec::with_capacity(n);
        let mut extras = Vec::with_capacity(n);
        for i in 0..n {
            let r = self.env.reset(key.fold_in(i as u64))?;
            obs.set_lane(i, &r.observation);
            states.push(r.state);
            extras.push(r.extras);
        }
        Ok((BatchState { states, extras }, obs))
    }

    pub fn step(&self, key: Key, batch: &mut BatchState<E::State>, actions: &[usize]) -> Result<BatchStep, EnvError> {
        let n = self.lanes();
        for len in [batch.states.len(), batch.extras.len(), actions.len()] {
            if len != n {
                return Err(EnvError::Shape { expected: n, got: len });
            }
        }
        let mut out = BatchStep {
            obs: BatchObs::zeros(self.env.obs_spec(), n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            infos: Vec::with_capacity(n),
        };
        for (i, (state, extras)) in batch.states.iter_mut().zip(batch.extras.iter_mut()).enumerate() {
            let t = self.env.transition(key.fold_in(i as u64), state, actions[i], extras)?;
            out.obs.observe_lane(&self.env, i, state);
            out.rewards.push(t.reward);
            out.dones.push(t.done);
            out.infos.push(t.info);
        }
        Ok(out)
    }

    pub fn observe(&self, batch: &BatchState<E::State>) -> BatchObs {
        let mut obs = BatchObs::zeros(self.env.obs_spec(), batch.len());
        for (i, s) in batch.states.iter().enumerate() {
            obs.observe_lane(&self.env, i, s);
        }
        obs
    }
}

impl<E: Upomdp> BatchEnv<E> {
    /// Starts every lane on a given level. `levels` holds either one level
    /// per environment index (broadcast over agents and evaluations) or one
    /// per lane.
    pub fn reset_to_levels(&self, levels: &[E::Level]) -> Result<(BatchState<E::State>, BatchObs), EnvError> {
        let n = self.lanes();
        let pick: Box<dyn Fn(usize) -> usize> = if levels.len() == n {
            Box::new(|i| i)
        } else if levels.len() == self.shape.n_envs {
            let n_envs = self.shape.n_envs;
            Box::new(move |i| i % n_envs)
        } else {
            return Err(EnvError::Shape { expected: self.shape.n_envs, got: levels.len() });
        };
        let mut obs = BatchObs::zeros(self.env.obs_spec(), n);
        let mut states = Vec::with_capacity(n);
        let mut extras = Vec::with_capacity(n);
        for i in 0..n {
            let r = self.env.reset_to_level(&levels[pick(i)])?;
            obs.set_lane(i, &r.observation);
            states.push(r.state);
            extras.push(r.extras);
        }
        Ok((BatchState { states, extras }, obs))
    }

    pub fn levels(&self, batch: &BatchState<E::State>) -> Vec<E::Level> {
        batch.states.iter().map(|s| self.env.get_env_state(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{AMaze, StaticParams};
    use crate::wrappers::{AutoReplay, AutoReset};
    use rand::Rng;

    #[test]
    fn shape_arithmetic() {
        let s = BatchShape::new(2, 3, 4).unwrap();
        assert_eq!(s.inner(), 12);
        assert_eq!(s.total(), 24);
        assert_eq!(s.lane(1, 2, 3), 23);
        assert!(BatchShape::new(0, 1, 1).is_err());
    }

    fn check_equivalence<E: Environment>(env: E, shape: BatchShape, steps: usize)
    where
        E::State: PartialEq + std::fmt::Debug,
    {
        let benv = BatchEnv::new(env, shape);
        let key = Key::new(99);
        let (mut batch, obs) = benv.reset(key).unwrap();
        let mut singles: Vec<_> = (0..benv.lanes()).map(|i| benv.env().reset(key.fold_in(i as u64)).unwrap()).collect();
        for (i, s) in singles.iter().enumerate() {
            assert_eq!(obs.lane(i), s.observation);
            assert_eq!(batch.states[i], s.state);
        }
        let mut rng = Key::new(5).stream();
        for t in 0..steps {
            let actions: Vec<usize> = (0..benv.lanes()).map(|_| rng.random_range(0..3)).collect();
            let step_key = Key::new(1000 + t as u64);
            let out = benv.step(step_key, &mut batch, &actions).unwrap();
            for i in 0..benv.lanes() {
                let prev = std::mem::take(&mut singles[i].extras);
                let s = benv.env().step(step_key.fold_in(i as u64), &singles[i].state, actions[i], prev).unwrap();
                assert_eq!(out.obs.lane(i), s.observation);
                assert_eq!(out.rewards[i], s.reward);
                assert_eq!(out.dones[i], s.done);
                assert_eq!(out.infos[i], s.info);
                assert_eq!(batch.states[i], s.state);
                singles[i] = s;
            }
        }
    }

    #[test]
    fn degenerate_batch_matches_single_env() {
        let p = StaticParams { max_episode_steps: 20, ..StaticParams::default() };
        check_equivalence(AutoReset(AMaze::new(p).unwrap()), BatchShape::new(1, 1, 1).unwrap(), 60);
    }

    #[test]
    fn batch_of_32_matches_sequential() {
        let p = StaticParams { max_episode_steps: 15, height: 7, width: 7, wall_budget: 8, ..StaticParams::default() };
        check_equivalence(AutoReset(AMaze::new(p.clone()).unwrap()), BatchShape::new(2, 4, 4).unwrap(), 50);
        check_equivalence(AutoReplay(AMaze::new(p).unwrap()), BatchShape::new(1, 1, 32).unwrap(), 50);
    }

    #[test]
    fn shape_errors() {
        let benv = BatchEnv::new(AMaze::new(StaticParams::default()).unwrap(), BatchShape::envs(4).unwrap());
        let (mut b, _) = benv.reset(Key::new(0)).unwrap();
        assert_eq!(benv.step(Key::new(1), &mut b, &[0, 1]).unwrap_err(), EnvError::Shape { expected: 4, got: 2 });
        assert!(benv.reset_to_levels(&[]).is_err());
    }

    #[test]
    fn levels_broadcast_over_agents() {
        let env = AMaze::new(StaticParams::default()).unwrap();
        let levels: Vec<_> = (0..3).map(|i| env.sample_level(Key::new(i)).unwrap()).collect();
        let benv = BatchEnv::new(env, BatchShape::new(2, 1, 3).unwrap());
        let (b, _) = benv.reset_to_levels(&levels).unwrap();
        let got = benv.levels(&b);
        assert_eq!(&got[..3], &levels[..]);
        assert_eq!(&got[3..], &levels[..]);
    }
}
