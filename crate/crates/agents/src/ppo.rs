//! Clipped PPO objective, its gradient, and the Adam update loop.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use ued_core::Key;

use crate::error::AgentError;
use crate::gae::compute_gae;
use crate::model::Params;
use crate::network::{log_softmax, RecurrentPolicy};
use crate::trajectory::TrajectoryBatch;
use crate::{cast, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f32,
    pub gae_lambda: f32,
    pub clip_range: f32,
    pub epochs: usize,
    pub minibatches: usize,
    pub lr: f32,
    pub adam_eps: f32,
    pub max_grad_norm: f32,
    pub value_loss_coef: f32,
    pub entropy_coef: f32,
    pub value_clipping: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.995,
            gae_lambda: 0.98,
            clip_range: 0.2,
            epochs: 5,
            minibatches: 1,
            lr: 1e-4,
            adam_eps: 1e-5,
            max_grad_norm: 0.5,
            value_loss_coef: 0.5,
            entropy_coef: 1e-3,
            value_clipping: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: String| Err(AgentError::Config(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return bad(format!("gae_lambda must be in (0, 1], got {}", self.gae_lambda));
        }
        if self.epochs == 0 || self.minibatches == 0 {
            return bad("epochs and minibatches must be >= 1".into());
        }
        if !(self.clip_range > 0.0) {
            return bad(format!("clip_range must be positive, got {}", self.clip_range));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.adam_eps > 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("lr, adam_eps and max_grad_norm must be positive".into());
        }
        if self.value_loss_coef < 0.0 || self.entropy_coef < 0.0 {
            return bad("loss coefficients must be non-negative".into());
        }
        Ok(())
    }
}

/// A trajectory with its advantages and return targets.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateBatch {
    pub traj: TrajectoryBatch,
    pub advantages: Vec<f32>,
    pub returns: Vec<f32>,
}

impl UpdateBatch {
    pub fn new(traj: TrajectoryBatch, gamma: f32, lambda: f32) -> Self {
        let (advantages, returns) =
            compute_gae(&traj.rewards, &traj.values, &traj.dones, &traj.last_values, traj.lanes, gamma, lambda);
        UpdateBatch { traj, advantages, returns }
    }

    pub fn select_lanes(&self, lanes: &[usize]) -> UpdateBatch {
        let pick = |x: &[f32]| {
            let mut out = Vec::with_capacity(self.traj.len * lanes.len());
            for t in 0..self.traj.len {
                out.extend(lanes.iter().map(|&b| x[t * self.traj.lanes + b]));
            }
            out
        };
        UpdateBatch { traj: self.traj.select_lanes(lanes), advantages: pick(&self.advantages), returns: pick(&self.returns) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
}

/// PPO loss over `traj` and its gradient. `advantages` are used as given
/// (already normalized by the caller).
pub fn ppo_loss_and_grad<F: Real>(
    net: &RecurrentPolicy,
    params: &Params<F>,
    traj: &TrajectoryBatch,
    advantages: &[f32],
    returns: &[f32],
    cfg: &PpoConfig,
) -> Result<(LossStats, Params<F>), AgentError> {
    let n = traj.steps();
    if advantages.len() != n || returns.len() != n {
        return Err(AgentError::Shape { what: "advantages", expected: n, got: advantages.len().min(returns.len()) });
    }
    let h0: Array2<F> = Array2::from_shape_vec((traj.lanes, traj.hidden_dim), traj.init_hidden.iter().map(|&x| F::from(x).unwrap()).collect())
        .map_err(|_| AgentError::Shape { what: "initial hidden", expected: traj.lanes * net.hidden_dim(), got: traj.init_hidden.len() })?;
    let input = traj.input();
    let cache = net.forward(params, &input, h0.view())?;
    let n_actions = net.n_actions();
    let inv_n = F::one() / cast::<F>(n as f64);
    let c = cast::<F>(cfg.clip_range as f64);
    let (one, zero) = (F::one(), F::zero());
    let ent_coef = cast::<F>(cfg.entropy_coef as f64);
    let vf_coef = cast::<F>(cfg.value_loss_coef as f64);

    let mut dlogits = Array2::<F>::zeros((n, n_actions));
    let mut dvalues = Array1::<F>::zeros(n);
    let mut st = LossStats::default();
    for i in 0..n {
        let logp = log_softmax(cache.logits.row(i));
        let a = traj.actions[i];
        let adv = F::from(advantages[i]).unwrap();
        let ratio = (logp[a] - F::from(traj.log_probs[i]).unwrap()).exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.max(one - c).min(one + c) * adv;
        let dpg = if surr1 <= surr2 { -adv * ratio } else { zero };
        let ent = logp.iter().fold(zero, |s, &l| s - l.exp() * l);
        let mut row = dlogits.row_mut(i);
        for k in 0..n_actions {
            let p = logp[k].exp();
            let onehot = if k == a { one } else { zero };
            row[k] = inv_n * (dpg * (onehot - p) + ent_coef * p * (logp[k] + ent));
        }

        let v = cache.values[i];
        let old_v = F::from(traj.values[i]).unwrap();
        let ret = F::from(returns[i]).unwrap();
        let l1 = (v - ret) * (v - ret);
        let (vl, dv) = if cfg.value_clipping {
            let d = v - old_v;
            let vc = old_v + d.max(-c).min(c);
            let l2 = (vc - ret) * (vc - ret);
            if l1 >= l2 {
                (l1, v - ret)
            } else {
                (l2, if d.abs() < c { vc - ret } else { zero })
            }
        } else {
            (l1, v - ret)
        };
        dvalues[i] = inv_n * vf_coef * dv;

        let r64 = ratio.to_f64().unwrap();
        st.policy_loss -= surr1.min(surr2).to_f64().unwrap();
        st.value_loss += 0.5 * vl.to_f64().unwrap();
        st.entropy += ent.to_f64().unwrap();
        st.approx_kl += (r64 - 1.0) - r64.ln();
        st.clip_frac += ((r64 - 1.0).abs() > cfg.clip_range as f64) as u8 as f64;
    }
    let nf = n as f64;
    st.policy_loss /= nf;
    st.value_loss /= nf;
    st.entropy /= nf;
    st.approx_kl /= nf;
    st.clip_frac /= nf;
    st.loss = st.policy_loss + cfg.value_loss_coef as f64 * st.value_loss - cfg.entropy_coef as f64 * st.entropy;
    let grads = net.backward(params, &input, &cache, dlogits.view(), dvalues.view());
    Ok((st, grads))
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub step: u64,
}

impl AdamState {
    pub const BETA1: f32 = 0.9;
    pub const BETA2: f32 = 0.999;

    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    pub fn apply(&mut self, params: &mut [f32], grads: &[f32], lr: f32, eps: f32) {
        self.step += 1;
        let (b1, b2) = (Self::BETA1, Self::BETA2);
        let c1 = 1.0 - (b1 as f64).powi(self.step as i32);
        let c2 = 1.0 - (b2 as f64).powi(self.step as i32);
        let (c1, c2) = (c1 as f32, c2 as f32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

/// Combines gradients and advantage statistics across data-parallel shards.
/// All participants must call the methods in the same order.
pub trait GradReducer: Sync {
    /// Replaces `grads` with the mean over participants.
    fn mean_grads(&self, grads: &mut [f32]);
    /// Elementwise sum of `[count, sum, sum of squares]` over participants.
    fn sum_moments(&self, local: [f64; 3]) -> [f64; 3];
}

/// Single-participant reducer.
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalReducer;

impl GradReducer for LocalReducer {
    fn mean_grads(&self, _grads: &mut [f32]) {}

    fn sum_moments(&self, local: [f64; 3]) -> [f64; 3] {
        local
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub grad_norm: f64,
    pub passes: usize,
    /// Loss of each pass, in order.
    pub pass_losses: Vec<f64>,
}

/// Normalizes advantages with statistics pooled through `reducer`.
pub fn normalize_advantages(adv: &[f32], reducer: &dyn GradReducer) -> Vec<f32> {
    let mut local = [adv.len() as f64, 0.0, 0.0];
    for &a in adv {
        local[1] += a as f64;
        local[2] += (a as f64) * (a as f64);
    }
    let [n, s, ss] = reducer.sum_moments(local);
    if n == 0.0 {
        return adv.to_vec();
    }
    let mean = s / n;
    let std = (ss / n - mean * mean).max(0.0).sqrt();
    adv.iter().map(|&a| ((a as f64 - mean) / (std + 1e-8)) as f32).collect()
}

/// Runs `epochs x minibatches` Adam steps on `batch`. Minibatches are formed
/// from whole lanes so recurrent state stays consistent.
pub fn ppo_update(
    net: &RecurrentPolicy,
    params: &mut Params<f32>,
    opt: &mut AdamState,
    batch: &UpdateBatch,
    cfg: &PpoConfig,
    key: Key,
    reducer: &dyn GradReducer,
) -> Result<UpdateStats, AgentError> {
    cfg.validate()?;
    let lanes = batch.traj.lanes;
    if cfg.minibatches > lanes {
        return Err(AgentError::Config(format!("{} minibatches but only {lanes} lanes", cfg.minibatches)));
    }
    let adv = normalize_advantages(&batch.advantages, reducer);
    let normalized = UpdateBatch { traj: batch.traj.clone(), advantages: adv, returns: batch.returns.clone() };
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..lanes).collect();
    for epoch in 0..cfg.epochs {
        if cfg.minibatches > 1 {
            order.shuffle(&mut key.fold_in(epoch as u64).stream());
        }
        for mb in 0..cfg.minibatches {
            let lo = mb * lanes / cfg.minibatches;
            let hi = (mb + 1) * lanes / cfg.minibatches;
            let part;
            let view = if cfg.minibatches == 1 {
                &normalized
            } else {
                part = normalized.select_lanes(&order[lo..hi]);
                &part
            };
            let (ls, mut grads) = ppo_loss_and_grad(net, params, &view.traj, &view.advantages, &view.returns, cfg)?;
            if !ls.loss.is_finite() || !grads.is_finite() {
                return Err(AgentError::NonFinite {
                    what: if ls.loss.is_finite() { "gradient" } else { "loss" },
                    epoch,
                    minibatch: mb,
                    detail: format!("{ls:?}"),
                });
            }
            reducer.mean_grads(&mut grads.data);
            let norm = grads.data.iter().map(|&g| (g as f64) * (g as f64)).sum::<f64>().sqrt();
            if norm > cfg.max_grad_norm as f64 {
                let scale = (cfg.max_grad_norm as f64 / norm) as f32;
                grads.data.iter_mut().for_each(|g| *g *= scale);
            }
            opt.apply(&mut params.data, &grads.data, cfg.lr, cfg.adam_eps);
            stats.loss += ls.loss;
            stats.policy_loss += ls.policy_loss;
            stats.value_loss += ls.value_loss;
            stats.entropy += ls.entropy;
            stats.approx_kl += ls.approx_kl;
            stats.clip_frac += ls.clip_frac;
            stats.grad_norm = norm;
            stats.passes += 1;
            stats.pass_losses.push(ls.loss);
        }
    }
    let p = stats.passes as f64;
    stats.loss /= p;
    stats.policy_loss /= p;
    stats.value_loss /= p;
    stats.entropy /= p;
    stats.approx_kl /= p;
    stats.clip_frac /= p;
    Ok(stats)
}
