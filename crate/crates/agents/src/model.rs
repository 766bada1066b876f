//! Parameter layout of the recurrent policy.
//!
//! All parameters live in one flat vector; a [`Layout`] records where each
//! named array sits and its shape.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use ued_core::{Key, ObsSpec};

use crate::{cast, Real};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Embedding width per observation token.
    pub embed_dim: usize,
    /// Embedding width of the auxiliary code (heading or design phase).
    pub aux_dim: usize,
    pub encoder_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { embed_dim: 8, aux_dim: 4, encoder_dim: 128, hidden_dim: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub obs: ObsSpec,
    pub n_actions: usize,
    pub config: ModelConfig,
}

impl ModelSpec {
    pub fn new(obs: ObsSpec, n_actions: usize, config: ModelConfig) -> Self {
        ModelSpec { obs, n_actions, config }
    }

    pub fn input_dim(&self) -> usize {
        self.obs.n_tokens * self.config.embed_dim + self.config.aux_dim + self.obs.n_scalars
    }

    pub fn layout(&self) -> Layout {
        let c = &self.config;
        let h = c.hidden_dim;
        let shapes = [
            (self.obs.n_codes, c.embed_dim),
            (self.obs.n_aux, c.aux_dim),
            (self.input_dim(), c.encoder_dim),
            (1, c.encoder_dim),
            (c.encoder_dim, 3 * h),
            (1, 3 * h),
            (h, 3 * h),
            (1, 3 * h),
            (h, self.n_actions),
            (1, self.n_actions),
            (h, 1),
            (1, 1),
        ];
        let mut offset = 0;
        let slots = shapes.map(|(rows, cols)| {
            let s = Slot { offset, rows, cols };
            offset += rows * cols;
            s
        });
        Layout { slots, total: offset }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

pub const PARAM_NAMES: [&str; 12] = [
    "tile_embed",
    "aux_embed",
    "encoder.w",
    "encoder.b",
    "gru.w_in",
    "gru.b_in",
    "gru.w_h",
    "gru.b_h",
    "policy.w",
    "policy.b",
    "value.w",
    "value.b",
];

/// Offsets of each parameter array. Gate blocks in the recurrent weights are
/// ordered reset, update, candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub slots: [Slot; 12],
    pub total: usize,
}

impl Layout {
    pub const TILE_EMBED: usize = 0;
    pub const AUX_EMBED: usize = 1;
    pub const ENC_W: usize = 2;
    pub const ENC_B: usize = 3;
    pub const GRU_W_IN: usize = 4;
    pub const GRU_B_IN: usize = 5;
    pub const GRU_W_H: usize = 6;
    pub const GRU_B_H: usize = 7;
    pub const PI_W: usize = 8;
    pub const PI_B: usize = 9;
    pub const V_W: usize = 10;
    pub const V_B: usize = 11;

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, Slot)> + '_ {
        PARAM_NAMES.iter().copied().zip(self.slots.iter().copied())
    }
}

/// A flat parameter (or gradient) vector with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<F> {
    pub layout: Layout,
    pub data: Vec<F>,
}

impl<F: Real> Params<F> {
    pub fn zeros(layout: Layout) -> Self {
        Params { layout, data: vec![F::zero(); layout.total] }
    }

    pub fn mat(&self, which: usize) -> ArrayView2<'_, F> {
        let s = self.layout.slots[which];
        ArrayView2::from_shape((s.rows, s.cols), &self.data[s.range()]).expect("slot shape")
    }

    pub fn mat_mut(&mut self, which: usize) -> ArrayViewMut2<'_, F> {
        let s = self.layout.slots[which];
        ArrayViewMut2::from_shape((s.rows, s.cols), &mut self.data[s.range()]).expect("slot shape")
    }

    pub fn vec(&self, which: usize) -> ArrayView1<'_, F> {
        let s = self.layout.slots[which];
        ArrayView1::from(&self.data[s.range()])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<G: Real>(&self) -> Params<G> {
        Params { layout: self.layout, data: self.data.iter().map(|&x| G::from(x).unwrap()).collect() }
    }
}

/// Orthogonal matrix of the given shape scaled by `gain`, via modified
/// Gram-Schmidt on a Gaussian draw.
fn orthogonal(rng: &mut impl Rng, rows: usize, cols: usize, gain: f64) -> Vec<f64> {
    let (n, m) = if rows >= cols { (cols, rows) } else { (rows, cols) };
    // n orthonormal vectors of length m
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vecs.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            vecs.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for (i, v) in vecs.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            let (r, c) = if rows >= cols { (j, i) } else { (i, j) };
            out[r * cols + c] = gain * x;
        }
    }
    out
}

/// Orthogonal weights (gain √2 for the encoder and recurrent cell, 0.01 for
/// both heads), zero biases, unit-normal embeddings.
pub fn init_params<F: Real>(spec: &ModelSpec, key: Key) -> Params<F> {
    let layout = spec.layout();
    let mut p = Params::zeros(layout);
    let mut rng = key.stream();
    let sqrt2 = std::f64::consts::SQRT_2;
    for (which, gain) in [
        (Layout::ENC_W, sqrt2),
        (Layout::GRU_W_IN, sqrt2),
        (Layout::GRU_W_H, sqrt2),
        (Layout::PI_W, 0.01),
        (Layout::V_W, 0.01),
    ] {
        let s = layout.slots[which];
        let w = orthogonal(&mut rng, s.rows, s.cols, gain);
        p.data[s.range()].iter_mut().zip(w).for_each(|(d, x)| *d = cast(x));
    }
    for which in [Layout::TILE_EMBED, Layout::AUX_EMBED] {
        let s = layout.slots[which];
        for d in &mut p.data[s.range()] {
            *d = cast(rng.sample::<f64, _>(StandardNormal));
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ModelSpec {
        ModelSpec::new(ObsSpec { n_tokens: 25, n_codes: 4, n_aux: 4, n_scalars: 0 }, 3, ModelConfig::default())
    }

    #[test]
    fn layout_is_contiguous() {
        let l = spec().layout();
        let mut off = 0;
        for (_, s) in l.entries() {
            assert_eq!(s.offset, off);
            off += s.len();
        }
        assert_eq!(off, l.total);
        assert_eq!(l.slots[Layout::ENC_W].rows, 25 * 8 + 4);
        assert_eq!(l.slots[Layout::GRU_W_H].cols, 768);
    }

    #[test]
    fn orthogonal_columns_and_rows() {
        let mut rng = Key::new(1).stream();
        for (r, c) in [(6, 3), (3, 6), (5, 5)] {
            let w = orthogonal(&mut rng, r, c, 1.0);
            let k = r.min(c);
            for a in 0..k {
                for b in 0..k {
                    let dot: f64 = if r >= c {
                        (0..r).map(|i| w[i * c + a] * w[i * c + b]).sum()
                    } else {
                        (0..c).map(|j| w[a * c + j] * w[b * c + j]).sum()
                    };
                    assert!((dot - (a == b) as u8 as f64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn init_deterministic_and_biases_zero() {
        let a: Params<f32> = init_params(&spec(), Key::new(3));
        let b: Params<f32> = init_params(&spec(), Key::new(3));
        assert_eq!(a, b);
        assert!(a.vec(Layout::ENC_B).iter().all(|&x| x == 0.0));
        assert!(a.is_finite());
    }
}
