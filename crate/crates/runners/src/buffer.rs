//! The prioritized level buffer used by the PLR family.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use ued_core::Key;

use crate::error::RunnerError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFn {
    #[default]
    MaxMc,
    Pvl,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prioritization {
    #[default]
    Rank,
    Proportional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlrConfig {
    /// Probability of a replay iteration when the buffer is non-empty.
    pub replay_rate: f64,
    /// Total capacity, split evenly across shards.
    pub buffer_size: usize,
    pub score_fn: ScoreFn,
    pub prioritization: Prioritization,
    pub temperature: f64,
    pub staleness_coef: f64,
    /// Update the student only on replayed levels.
    pub robust: bool,
    /// Use discounted instead of undiscounted episodic returns for MaxMC.
    pub discounted_max_return: bool,
}

impl Default for PlrConfig {
    fn default() -> Self {
        PlrConfig {
            replay_rate: 0.5,
            buffer_size: 4000,
            score_fn: ScoreFn::MaxMc,
            prioritization: Prioritization::Rank,
            temperature: 0.3,
            staleness_coef: 0.3,
            robust: true,
            discounted_max_return: false,
        }
    }
}

impl PlrConfig {
    pub fn validate(&self) -> Result<(), RunnerError> {
        let bad = |m: String| Err(RunnerError::Config(m));
        if !(0.0..=1.0).contains(&self.replay_rate) {
            return bad(format!("plr.replay_rate must be in [0, 1], got {}", self.replay_rate));
        }
        if !(0.0..=1.0).contains(&self.staleness_coef) {
            return bad(format!("plr.staleness_coef must be in [0, 1], got {}", self.staleness_coef));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("plr.temperature must be positive, got {}", self.temperature));
        }
        if self.buffer_size == 0 {
            return bad("plr.buffer_size must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferEntry<L> {
    pub level: L,
    pub score: f32,
    pub max_return: f32,
    pub last_sampled: u64,
    pub insert_iter: u64,
}

/// A scored level proposed for the buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate<L> {
    pub level: L,
    pub score: f32,
    pub max_return: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    New,
    Replay,
}

/// Replay with probability `p` when the buffer has entries, otherwise new.
pub fn sample_decision(key: Key, nonempty: bool, p: f64) -> Branch {
    if nonempty && key.uniform() < p {
        Branch::Replay
    } else {
        Branch::New
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub inserted: usize,
    pub replaced: usize,
    pub refreshed: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct LevelBuffer<L: Clone + Eq + Hash> {
    capacity: usize,
    entries: Vec<BufferEntry<L>>,
    index: HashMap<L, usize>,
}

impl<L: Clone + Eq + Hash> PartialEq for LevelBuffer<L> {
    fn eq(&self, other: &Self) -> bool {
        self.capacity == other.capacity && self.entries == other.entries
    }
}

impl<L: Clone + Eq + Hash> LevelBuffer<L> {
    pub fn new(capacity: usize) -> Self {
        LevelBuffer { capacity, entries: Vec::new(), index: HashMap::new() }
    }

    pub fn from_entries(capacity: usize, entries: Vec<BufferEntry<L>>) -> Result<Self, RunnerError> {
        if entries.len() > capacity {
            return Err(RunnerError::Snapshot(format!("{} entries exceed capacity {capacity}", entries.len())));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if !e.score.is_finite() || index.insert(e.level.clone(), i).is_some() {
                return Err(RunnerError::Snapshot("duplicate level or non-finite score in buffer".into()));
            }
        }
        Ok(LevelBuffer { capacity, entries, index })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BufferEntry<L>] {
        &self.entries
    }

    pub fn find(&self, level: &L) -> Option<&BufferEntry<L>> {
        self.index.get(level).map(|&i| &self.entries[i])
    }

    /// Replay distribution `(1 - ρ) P_S + ρ P_C` at iteration `iter`.
    pub fn probabilities(&self, cfg: &PlrConfig, iter: u64) -> Vec<f64> {
        let n = self.entries.len();
        if n == 0 {
            return Vec::new();
        }
        let inv_t = 1.0 / cfg.temperature;
        let mut ps = match cfg.prioritization {
            Prioritization::Rank => {
                let mut order: Vec<usize> = (0..n).collect();
                // stable: equal scores keep buffer order
                order.sort_by(|&a, &b| self.entries[b].score.total_cmp(&self.entries[a].score));
                let mut w = vec![0.0; n];
                for (rank, &i) in order.iter().enumerate() {
                    w[i] = (1.0 / (rank + 1) as f64).powf(inv_t);
                }
                w
            }
            Prioritization::Proportional => {
                self.entries.iter().map(|e| (e.score.max(0.0) as f64).powf(inv_t)).collect()
            }
        };
        normalize_or_uniform(&mut ps);
        let rho = cfg.staleness_coef;
        let mut pc: Vec<f64> = self.entries.iter().map(|e| iter.saturating_sub(e.last_sampled) as f64).collect();
        let total: f64 = pc.iter().sum();
        if total > 0.0 {
            pc.iter_mut().for_each(|x| *x /= total);
        } else {
            pc.clone_from(&ps);
        }
        ps.iter().zip(&pc).map(|(s, c)| (1.0 - rho) * s + rho * c).collect()
    }

    /// Draws `n` entries with replacement and marks them sampled at `iter`.
    /// Returns their indices.
    pub fn sample(&mut self, key: Key, n: usize, cfg: &PlrConfig, iter: u64) -> Result<Vec<usize>, RunnerError> {
        if self.entries.is_empty() {
            return Err(RunnerError::EmptyBuffer);
        }
        let p = self.probabilities(cfg, iter);
        let mut cdf = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        for x in &p {
            acc += x;
            cdf.push(acc);
        }
        let picks: Vec<usize> = (0..n)
            .map(|i| {
                let u = key.fold_in(i as u64).uniform() * acc;
                cdf.iter().position(|&c| u < c).unwrap_or(p.len() - 1)
            })
            .collect();
        for &i in &picks {
            self.entries[i].last_sampled = iter;
        }
        Ok(picks)
    }

    /// Applies candidates in order: known levels are refreshed in place,
    /// new ones fill free capacity, then replace the lowest-scoring entry
    /// (the staler one on ties) when they score strictly higher.
    pub fn update(&mut self, candidates: &[Candidate<L>], iter: u64) -> UpdateOutcome {
        let mut out = UpdateOutcome::default();
        for c in candidates {
            if let Some(&i) = self.index.get(&c.level) {
                let e = &mut self.entries[i];
                e.score = c.score;
                e.max_return = e.max_return.max(c.max_return);
                out.refreshed += 1;
                continue;
            }
            let entry = BufferEntry {
                level: c.level.clone(),
                score: c.score,
                max_return: c.max_return,
                last_sampled: iter,
                insert_iter: iter,
            };
            if self.entries.len() < self.capacity {
                self.index.insert(c.level.clone(), self.entries.len());
                self.entries.push(entry);
                out.inserted += 1;
                continue;
            }
            let victim = (0..self.entries.len())
                .min_by(|&a, &b| {
                    let (ea, eb) = (&self.entries[a], &self.entries[b]);
                    ea.score.total_cmp(&eb.score).then(ea.last_sampled.cmp(&eb.last_sampled))
                })
                .expect("full buffer has entries");
            if c.score > self.entries[victim].score {
                self.index.remove(&self.entries[victim].level);
                self.index.insert(c.level.clone(), victim);
                self.entries[victim] = entry;
                out.replaced += 1;
            } else {
                out.rejected += 1;
            }
        }
        out
    }

    /// `(size, mean score, max score)`.
    pub fn stats(&self) -> (usize, f64, f64) {
        if self.entries.is_empty() {
            return (0, 0.0, 0.0);
        }
        let sum: f64 = self.entries.iter().map(|e| e.score as f64).sum();
        let max = self.entries.iter().map(|e| e.score as f64).fold(f64::NEG_INFINITY, f64::max);
        (self.entries.len(), sum / self.entries.len() as f64, max)
    }
}

fn normalize_or_uniform(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|x| *x = u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(level: u32, score: f32) -> Candidate<u32> {
        Candidate { level, score, max_return: 0.0 }
    }

    #[test]
    fn rank_probabilities_closed_form() {
        let mut b = LevelBuffer::new(10);
        b.update(&[cand(0, 3.0), cand(1, 1.0), cand(2, 2.0)], 0);
        let cfg = PlrConfig { temperature: 1.0, staleness_coef: 0.0, ..Default::default() };
        let p = b.probabilities(&cfg, 0);
        for (a, e) in p.iter().zip([6.0 / 11.0, 2.0 / 11.0, 3.0 / 11.0]) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn staleness_only() {
        let mut b = LevelBuffer::new(10);
        b.update(&[cand(0, 3.0)], 0);
        b.update(&[cand(1, 1.0)], 2);
        b.update(&[cand(2, 2.0)], 3);
        let cfg = PlrConfig { staleness_coef: 1.0, ..Default::default() };
        let p = b.probabilities(&cfg, 4);
        // staleness 4, 2, 1
        for (a, e) in p.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn eviction_trace() {
        let mut b = LevelBuffer::new(2);
        for (l, s) in [(0, 5.0), (1, 1.0), (2, 3.0)] {
            b.update(&[cand(l, s)], 0);
        }
        let mut kept: Vec<f32> = b.entries().iter().map(|e| e.score).collect();
        kept.sort_by(f32::total_cmp);
        assert_eq!(kept, vec![3.0, 5.0]);
        let before = b.clone();
        assert_eq!(b.update(&[cand(9, 2.0)], 1).rejected, 1);
        assert_eq!(b, before);
        assert_eq!(b.update(&[cand(0, 0.5)], 1).refreshed, 1);
        assert_eq!(b.len(), 2);
        assert_eq!(b.find(&0).unwrap().score, 0.5);
    }

    #[test]
    fn eviction_prefers_stale_on_ties() {
        let mut b = LevelBuffer::new(2);
        b.update(&[cand(0, 1.0)], 5);
        b.update(&[cand(1, 1.0)], 2);
        b.update(&[cand(2, 4.0)], 6);
        assert!(b.find(&1).is_none());
        assert!(b.find(&0).is_some());
    }

    #[test]
    fn decisions() {
        for i in 0..100 {
            let k = Key::new(i);
            assert_eq!(sample_decision(k, true, 0.0), Branch::New);
            assert_eq!(sample_decision(k, true, 1.0), Branch::Replay);
            assert_eq!(sample_decision(k, false, 1.0), Branch::New);
        }
    }

    #[test]
    fn empty_sample_errors() {
        let mut b: LevelBuffer<u32> = LevelBuffer::new(3);
        assert!(matches!(b.sample(Key::new(0), 1, &PlrConfig::default(), 0), Err(RunnerError::EmptyBuffer)));
    }
}
