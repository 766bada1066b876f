//! Recurrent actor-critic: token embeddings, a ReLU encoder, a GRU cell and
//! linear policy and value heads. Forward and backward passes are written
//! out explicitly over a whole `[T, B]` sequence.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use ued_core::{BatchObs, Key};

use crate::error::AgentError;
use crate::model::{init_params, Layout, ModelSpec, Params};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

/// A `[T, B]` sequence of observations, time-major. `resets[t * B + b]` zeroes
/// lane `b`'s hidden state before step `t`.
#[derive(Clone, Copy, Debug)]
pub struct SeqInput<'a> {
    pub len: usize,
    pub lanes: usize,
    pub tokens: &'a [u8],
    pub aux: &'a [u8],
    pub scalars: &'a [f32],
    pub resets: &'a [bool],
}

impl<'a> SeqInput<'a> {
    pub fn from_obs(obs: &'a BatchObs, resets: &'a [bool]) -> Self {
        SeqInput { len: 1, lanes: obs.len(), tokens: &obs.tokens, aux: &obs.aux, scalars: &obs.scalars, resets }
    }

    fn rows(&self) -> usize {
        self.len * self.lanes
    }
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct SeqCache<F> {
    x: Array2<F>,
    pre: Array2<F>,
    enc: Array2<F>,
    h_in: Array2<F>,
    r: Array2<F>,
    z: Array2<F>,
    n: Array2<F>,
    hn: Array2<F>,
    hs: Array2<F>,
    pub logits: Array2<F>,
    pub values: Array1<F>,
    pub final_hidden: Array2<F>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrentPolicy {
    spec: ModelSpec,
    layout: Layout,
}

#[inline]
fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl RecurrentPolicy {
    pub fn new(spec: ModelSpec) -> Self {
        let layout = spec.layout();
        RecurrentPolicy { spec, layout }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn hidden_dim(&self) -> usize {
        self.spec.config.hidden_dim
    }

    pub fn n_actions(&self) -> usize {
        self.spec.n_actions
    }

    pub fn init<F: Real>(&self, key: Key) -> Params<F> {
        init_params(&self.spec, key)
    }

    fn check_input<F: Real>(&self, params: &Params<F>, input: &SeqInput, h0: ArrayView2<F>) -> Result<(), AgentError> {
        let n = input.rows();
        let o = &self.spec.obs;
        let checks = [
            ("parameters", self.layout.total, params.data.len()),
            ("tokens", n * o.n_tokens, input.tokens.len()),
            ("aux", n, input.aux.len()),
            ("scalars", n * o.n_scalars, input.scalars.len()),
            ("resets", n, input.resets.len()),
            ("hidden rows", input.lanes, h0.nrows()),
            ("hidden width", self.hidden_dim(), h0.ncols()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(AgentError::Shape { what, expected, got });
            }
        }
        if let Some(&t) = input.tokens.iter().find(|&&t| t as usize >= o.n_codes) {
            return Err(AgentError::Shape { what: "token code", expected: o.n_codes, got: t as usize });
        }
        if let Some(&a) = input.aux.iter().find(|&&a| a as usize >= o.n_aux) {
            return Err(AgentError::Shape { what: "aux code", expected: o.n_aux, got: a as usize });
        }
        Ok(())
    }

    fn embed<F: Real>(&self, params: &Params<F>, input: &SeqInput) -> Array2<F> {
        let o = &self.spec.obs;
        let (e, ea) = (self.spec.config.embed_dim, self.spec.config.aux_dim);
        let n = input.rows();
        let mut x = Array2::zeros((n, self.spec.input_dim()));
        let tile = params.mat(Layout::TILE_EMBED);
        let aux = params.mat(Layout::AUX_EMBED);
        for (row, mut xr) in x.outer_iter_mut().enumerate() {
            let xr = xr.as_slice_mut().expect("row-major");
            for k in 0..o.n_tokens {
                let code = input.tokens[row * o.n_tokens + k] as usize;
                xr[k * e..(k + 1) * e].copy_from_slice(tile.row(code).as_slice().unwrap());
            }
            let base = o.n_tokens * e;
            xr[base..base + ea].copy_from_slice(aux.row(input.aux[row] as usize).as_slice().unwrap());
            for (d, &s) in xr[base + ea..].iter_mut().zip(&input.scalars[row * o.n_scalars..(row + 1) * o.n_scalars]) {
                *d = F::from(s).unwrap();
            }
        }
        x
    }

    /// Runs the network over a full sequence starting from hidden state `h0`.
    pub fn forward<F: Real>(&self, params: &Params<F>, input: &SeqInput, h0: ArrayView2<F>) -> Result<SeqCache<F>, AgentError> {
        self.check_input(params, input, h0)?;
        let (t_len, b) = (input.len, input.lanes);
        let h = self.hidden_dim();
        let n = input.rows();

        let x = self.embed(params, input);
        let mut pre = x.dot(&params.mat(Layout::ENC_W));
        pre += &params.vec(Layout::ENC_B);
        let enc = pre.mapv(|v| v.max(F::zero()));
        let mut xi = enc.dot(&params.mat(Layout::GRU_W_IN));
        xi += &params.vec(Layout::GRU_B_IN);

        let w_h = params.mat(Layout::GRU_W_H);
        let b_h = params.vec(Layout::GRU_B_H);
        let mut h_in = Array2::zeros((n, h));
        let mut r = Array2::zeros((n, h));
        let mut z = Array2::zeros((n, h));
        let mut nn = Array2::zeros((n, h));
        let mut hn = Array2::zeros((n, h));
        let mut hs = Array2::zeros((n, h));
        let mut prev = h0.to_owned();
        let mut hh = Array2::zeros((b, 3 * h));
        for t in 0..t_len {
            let base = t * b;
            for lane in 0..b {
                if input.resets[base + lane] {
                    prev.row_mut(lane).fill(F::zero());
                }
            }
            h_in.slice_mut(s![base..base + b, ..]).assign(&prev);
            hh.assign(&b_h.broadcast((b, 3 * h)).unwrap());
            general_mat_mul(F::one(), &prev, &w_h, F::one(), &mut hh);
            for lane in 0..b {
                let row = base + lane;
                for j in 0..h {
                    let rv = sigmoid(xi[[row, j]] + hh[[lane, j]]);
                    let zv = sigmoid(xi[[row, h + j]] + hh[[lane, h + j]]);
                    let hnv = hh[[lane, 2 * h + j]];
                    let nv = (xi[[row, 2 * h + j]] + rv * hnv).tanh();
                    let out = (F::one() - zv) * nv + zv * prev[[lane, j]];
                    r[[row, j]] = rv;
                    z[[row, j]] = zv;
                    nn[[row, j]] = nv;
                    hn[[row, j]] = hnv;
                    hs[[row, j]] = out;
                }
            }
            prev.assign(&hs.slice(s![base..base + b, ..]));
        }

        let mut logits = hs.dot(&params.mat(Layout::PI_W));
        logits += &params.vec(Layout::PI_B);
        let mut values = hs.dot(&params.mat(Layout::V_W)).column(0).to_owned();
        values += params.vec(Layout::V_B)[0];
        Ok(SeqCache { x, pre, enc, h_in, r, z, n: nn, hn, hs, logits, values, final_hidden: prev })
    }

    /// Gradient of `sum(dlogits * logits) + sum(dvalues * values)` with
    /// respect to every parameter.
    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        input: &SeqInput,
        cache: &SeqCache<F>,
        dlogits: ArrayView2<F>,
        dvalues: ArrayView1<F>,
    ) -> Params<F> {
        let (t_len, b) = (input.len, input.lanes);
        let h = self.hidden_dim();
        let n = input.rows();
        let mut g = Params::zeros(self.layout);

        let dv = dvalues.insert_axis(Axis(1));
        g.mat_mut(Layout::PI_W).assign(&cache.hs.t().dot(&dlogits));
        g.mat_mut(Layout::PI_B).row_mut(0).assign(&dlogits.sum_axis(Axis(0)));
        g.mat_mut(Layout::V_W).assign(&cache.hs.t().dot(&dv));
        g.mat_mut(Layout::V_B)[[0, 0]] = dvalues.sum();

        let mut dhs = dlogits.dot(&params.mat(Layout::PI_W).t());
        general_mat_mul(F::one(), &dv, &params.mat(Layout::V_W).t(), F::one(), &mut dhs);

        let w_h = params.mat(Layout::GRU_W_H);
        let mut dxi = Array2::zeros((n, 3 * h));
        let mut dw_h = Array2::zeros((h, 3 * h));
        let mut db_h = Array1::zeros(3 * h);
        let mut carry = Array2::<F>::zeros((b, h));
        let mut dhh = Array2::zeros((b, 3 * h));
        let mut dh_in = Array2::zeros((b, h));
        for t in (0..t_len).rev() {
            let base = t * b;
            for lane in 0..b {
                let row = base + lane;
                for j in 0..h {
                    let dh = dhs[[row, j]] + carry[[lane, j]];
                    let (rv, zv, nv) = (cache.r[[row, j]], cache.z[[row, j]], cache.n[[row, j]]);
                    let dn = dh * (F::one() - zv);
                    let dz = dh * (cache.h_in[[row, j]] - nv);
                    let dn_pre = dn * (F::one() - nv * nv);
                    let dr_pre = dn_pre * cache.hn[[row, j]] * rv * (F::one() - rv);
                    let dz_pre = dz * zv * (F::one() - zv);
                    dxi[[row, j]] = dr_pre;
                    dxi[[row, h + j]] = dz_pre;
                    dxi[[row, 2 * h + j]] = dn_pre;
                    dhh[[lane, j]] = dr_pre;
                    dhh[[lane, h + j]] = dz_pre;
                    dhh[[lane, 2 * h + j]] = dn_pre * rv;
                    dh_in[[lane, j]] = dh * zv;
                }
            }
            let h_in_t = cache.h_in.slice(s![base..base + b, ..]);
            general_mat_mul(F::one(), &h_in_t.t(), &dhh, F::one(), &mut dw_h);
            db_h += &dhh.sum_axis(Axis(0));
            general_mat_mul(F::one(), &dhh, &w_h.t(), F::one(), &mut dh_in);
            for lane in 0..b {
                if input.resets[base + lane] {
                    carry.row_mut(lane).fill(F::zero());
                } else {
                    carry.row_mut(lane).assign(&dh_in.row(lane));
                }
            }
        }
        g.mat_mut(Layout::GRU_W_H).assign(&dw_h);
        g.mat_mut(Layout::GRU_B_H).row_mut(0).assign(&db_h);

        g.mat_mut(Layout::GRU_W_IN).assign(&cache.enc.t().dot(&dxi));
        g.mat_mut(Layout::GRU_B_IN).row_mut(0).assign(&dxi.sum_axis(Axis(0)));
        let mut dpre = dxi.dot(&params.mat(Layout::GRU_W_IN).t());
        dpre.zip_mut_with(&cache.pre, |d, &p| {
            if p <= F::zero() {
                *d = F::zero();
            }
        });
        g.mat_mut(Layout::ENC_W).assign(&cache.x.t().dot(&dpre));
        g.mat_mut(Layout::ENC_B).row_mut(0).assign(&dpre.sum_axis(Axis(0)));
        let dx = dpre.dot(&params.mat(Layout::ENC_W).t());

        let o = &self.spec.obs;
        let (e, ea) = (self.spec.config.embed_dim, self.spec.config.aux_dim);
        let mut d_tile = g.mat_mut(Layout::TILE_EMBED).to_owned();
        let mut d_aux = g.mat_mut(Layout::AUX_EMBED).to_owned();
        for (row, dxr) in dx.outer_iter().enumerate() {
            for k in 0..o.n_tokens {
                let code = input.tokens[row * o.n_tokens + k] as usize;
                let mut dst = d_tile.row_mut(code);
                dst += &dxr.slice(s![k * e..(k + 1) * e]);
            }
            let base = o.n_tokens * e;
            let mut dst = d_aux.row_mut(input.aux[row] as usize);
            dst += &dxr.slice(s![base..base + ea]);
        }
        g.mat_mut(Layout::TILE_EMBED).assign(&d_tile);
        g.mat_mut(Layout::AUX_EMBED).assign(&d_aux);
        g
    }

    /// One inference step for a batch of lanes. `hidden` is updated in place.
    pub fn step(
        &self,
        params: &Params<f32>,
        obs: &BatchObs,
        resets: &[bool],
        hidden: &mut Array2<f32>,
    ) -> Result<(Array2<f32>, Array1<f32>), AgentError> {
        let input = SeqInput::from_obs(obs, resets);
        let cache = self.forward(params, &input, hidden.view())?;
        *hidden = cache.final_hidden;
        Ok((cache.logits, cache.values))
    }
}

/// Numerically stable log-softmax of one row.
pub fn log_softmax<F: Real>(logits: ArrayView1<F>) -> Array1<F> {
    let m = logits.fold(F::neg_infinity(), |a, &b| a.max(b));
    let lse = logits.fold(F::zero(), |a, &b| a + (b - m).exp()).ln() + m;
    logits.mapv(|v| v - lse)
}

/// Picks an action from `logits` and returns it with its log-probability.
pub fn select_action(logits: ArrayView1<f32>, mode: ActionMode, key: Key) -> (usize, f32) {
    let logp = log_softmax(logits);
    let action = match mode {
        ActionMode::Greedy => {
            let mut best = 0;
            for (i, &v) in logits.iter().enumerate() {
                if v > logits[best] {
                    best = i;
                }
            }
            best
        }
        ActionMode::Sample => {
            let u = key.uniform();
            let mut acc = 0.0f64;
            let mut chosen = logp.len() - 1;
            for (i, &lp) in logp.iter().enumerate() {
                acc += (lp as f64).exp();
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        }
    };
    (action, logp[action])
}

/// Mean entropy helper used by diagnostics.
pub fn entropy<F: Real>(logits: ArrayView1<F>) -> F {
    let lp = log_softmax(logits);
    lp.iter().fold(F::zero(), |a, &l| a - l.exp() * l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use ued_core::ObsSpec;

    fn small_net() -> RecurrentPolicy {
        let obs = ObsSpec { n_tokens: 3, n_codes: 4, n_aux: 2, n_scalars: 1 };
        RecurrentPolicy::new(ModelSpec::new(obs, 3, ModelConfig { embed_dim: 2, aux_dim: 2, encoder_dim: 5, hidden_dim: 4 }))
    }

    struct Data {
        t: usize,
        b: usize,
        tokens: Vec<u8>,
        aux: Vec<u8>,
        scalars: Vec<f32>,
        resets: Vec<bool>,
    }

    impl Data {
        fn random(key: Key, t: usize, b: usize) -> Self {
            let n = t * b;
            let u = |i: u64| key.fold_in(i).uniform();
            Data {
                t,
                b,
                tokens: (0..n * 3).map(|i| (u(i as u64) * 4.0) as u8).collect(),
                aux: (0..n).map(|i| (u(10_000 + i as u64) * 2.0) as u8).collect(),
                scalars: (0..n).map(|i| u(20_000 + i as u64) as f32).collect(),
                resets: (0..n).map(|i| i < b || u(30_000 + i as u64) < 0.2).collect(),
            }
        }

        fn input(&self) -> SeqInput<'_> {
            SeqInput { len: self.t, lanes: self.b, tokens: &self.tokens, aux: &self.aux, scalars: &self.scalars, resets: &self.resets }
        }
    }

    #[test]
    fn sequence_equals_stepwise() {
        let net = small_net();
        let p: Params<f64> = net.init(Key::new(0));
        let d = Data::random(Key::new(1), 6, 3);
        let full = net.forward(&p, &d.input(), Array2::zeros((3, 4)).view()).unwrap();
        let mut h = Array2::<f64>::zeros((3, 4));
        for t in 0..6 {
            let inp = SeqInput {
                len: 1,
                lanes: 3,
                tokens: &d.tokens[t * 9..(t + 1) * 9],
                aux: &d.aux[t * 3..(t + 1) * 3],
                scalars: &d.scalars[t * 3..(t + 1) * 3],
                resets: &d.resets[t * 3..(t + 1) * 3],
            };
            let c = net.forward(&p, &inp, h.view()).unwrap();
            for lane in 0..3 {
                for a in 0..3 {
                    assert!((c.logits[[lane, a]] - full.logits[[t * 3 + lane, a]]).abs() < 1e-12);
                }
                assert!((c.values[lane] - full.values[t * 3 + lane]).abs() < 1e-12);
            }
            h = c.final_hidden;
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = small_net();
        let mut p: Params<f64> = net.init(Key::new(5));
        // larger head weights so the check is not dominated by the 0.01 gain
        let s = p.layout.slots[Layout::PI_W];
        for (i, v) in p.data[s.range()].iter_mut().enumerate() {
            *v = 0.3 * ((i as f64) * 0.7).sin();
        }
        let d = Data::random(Key::new(6), 5, 2);
        let h0 = Array2::from_shape_fn((2, 4), |(i, j)| 0.1 * (i + j) as f64);
        let wl = Array2::from_shape_fn((10, 3), |(i, j)| ((i * 3 + j) as f64).cos());
        let wv = Array1::from_shape_fn(10, |i| (i as f64 * 0.3).sin());
        let objective = |p: &Params<f64>| {
            let c = net.forward(p, &d.input(), h0.view()).unwrap();
            (&c.logits * &wl).sum() + (&c.values * &wv).sum()
        };
        let cache = net.forward(&p, &d.input(), h0.view()).unwrap();
        let g = net.backward(&p, &d.input(), &cache, wl.view(), wv.view());
        let eps = 1e-6;
        for i in 0..p.data.len() {
            let mut a = p.clone();
            a.data[i] += eps;
            let mut b = p.clone();
            b.data[i] -= eps;
            let fd = (objective(&a) - objective(&b)) / (2.0 * eps);
            let an = g.data[i];
            let rel = (fd - an).abs() / (fd.abs().max(an.abs()).max(1e-6));
            assert!(rel < 1e-4 || (fd - an).abs() < 1e-8, "param {i}: fd {fd} analytic {an}");
        }
    }

    #[test]
    fn shape_errors() {
        let net = small_net();
        let p: Params<f32> = net.init(Key::new(0));
        let d = Data::random(Key::new(1), 2, 2);
        assert!(net.forward(&p, &d.input(), Array2::zeros((3, 4)).view()).is_err());
        let mut bad = Data::random(Key::new(1), 2, 2);
        bad.tokens[0] = 9;
        assert!(net.forward(&p, &bad.input(), Array2::zeros((2, 4)).view()).is_err());
    }

    #[test]
    fn sampling_follows_probabilities() {
        let logits = Array1::from(vec![0.0f32, (2.0f32).ln(), (7.0f32).ln()]);
        let mut counts = [0usize; 3];
        for i in 0..20_000 {
            counts[select_action(logits.view(), ActionMode::Sample, Key::new(i)).0] += 1;
        }
        for (c, p) in counts.iter().zip([0.1, 0.2, 0.7]) {
            assert!((*c as f64 / 20_000.0 - p).abs() < 0.015);
        }
        assert_eq!(select_action(logits.view(), ActionMode::Greedy, Key::new(0)).0, 2);
    }
}
