//! Student-only curricula: DR and the PLR family, optionally sharded.

use std::sync::Arc;

use ued_agents::{rollout, ActionMode, AgentState, Carry, EpisodeRecord, GradReducer, LocalReducer, PpoAgent, UpdateBatch, UpdateStats};
use ued_core::maze::{AMaze, MazeLevel};
use ued_core::wrappers::{AutoReplay, AutoReset};
use ued_core::{BatchEnv, BatchShape, Environment, Key, Upomdp};

use crate::buffer::{sample_decision, Branch, Candidate, LevelBuffer};
use crate::comm::{all_true, ShardComm, ShardHandle};
use crate::config::{RunnerKind, RunnerSpec};
use crate::error::RunnerError;
use crate::mutator::{LevelMutator, MazeMutator};
use crate::record::{summarize_levels, IterationRecord};
use crate::score::score_lanes;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterMode {
    Dr,
    New,
    Replay,
    Parallel,
    /// Parallel variant with an empty buffer: every lane is new.
    Bootstrap,
}

impl IterMode {
    pub fn name(self) -> &'static str {
        match self {
            IterMode::Dr => "dr",
            IterMode::New => "new",
            IterMode::Replay => "replay",
            IterMode::Parallel => "parallel",
            IterMode::Bootstrap => "bootstrap",
        }
    }
}

/// What one shard did during one iteration.
#[derive(Clone, Debug)]
pub struct ShardStats {
    pub mode: IterMode,
    /// Scored candidates in the order they were applied to the buffer.
    pub new_candidates: Vec<Candidate<MazeLevel>>,
    pub replay_candidates: Vec<Candidate<MazeLevel>>,
    pub mutant_candidates: Vec<Candidate<MazeLevel>>,
    /// Buffer indices drawn for replay.
    pub replay_indices: Vec<usize>,
    /// Replay-lane index of each mutant's parent.
    pub mutant_parents: Vec<usize>,
    pub lanes: [usize; 3],
    pub update: Option<UpdateStats>,
    pub episodes: Vec<EpisodeRecord>,
    pub env_steps: u64,
    pub trained_levels: Vec<MazeLevel>,
}

impl ShardStats {
    fn new(mode: IterMode) -> Self {
        ShardStats {
            mode,
            new_candidates: Vec::new(),
            replay_candidates: Vec::new(),
            mutant_candidates: Vec::new(),
            replay_indices: Vec::new(),
            mutant_parents: Vec::new(),
            lanes: [0; 3],
            update: None,
            episodes: Vec::new(),
            env_steps: 0,
            trained_levels: Vec::new(),
        }
    }
}

struct ShardCtx<'a> {
    spec: &'a RunnerSpec,
    env: &'a AMaze,
    agent: &'a PpoAgent,
    mutator: &'a dyn LevelMutator,
    iteration: u64,
    shared: Key,
    local: Key,
    reducer: &'a dyn GradReducer,
}

impl ShardCtx<'_> {
    fn fresh_levels(&self, n: usize, offset: usize) -> Result<Vec<MazeLevel>, RunnerError> {
        let k = self.local.fold_in(0);
        (0..n).map(|i| Ok(self.env.sample_level(k.fold_in((offset + i) as u64))?)).collect()
    }

    /// Rolls out one lane per level, replaying each level on episode end.
    fn play(&self, student: &AgentState, levels: &[MazeLevel], key: Key) -> Result<(UpdateBatch, Vec<EpisodeRecord>), RunnerError> {
        let benv = BatchEnv::new(AutoReplay(self.env.clone()), BatchShape::envs(levels.len())?);
        let (mut bs, obs) = benv.reset_to_levels(levels)?;
        let carry = Carry::fresh(obs, self.agent.net.hidden_dim());
        let out = rollout(key, &self.agent.net, &[&student.params], &benv, &mut bs, carry, self.spec.rollout_length, ActionMode::Sample)?;
        let traj = out.trajs.into_iter().next().expect("single member");
        Ok((self.agent.batch(traj), out.episodes))
    }

    fn score(&self, buffer: &LevelBuffer<MazeLevel>, batch: &UpdateBatch, levels: &[MazeLevel]) -> Result<Vec<Candidate<MazeLevel>>, RunnerError> {
        let prior: Vec<Option<f32>> = levels.iter().map(|l| buffer.find(l).map(|e| e.max_return)).collect();
        let scores = score_lanes(batch, &prior, &self.spec.plr, self.spec.ppo.gamma)?;
        Ok(levels
            .iter()
            .zip(scores)
            .map(|(l, (score, max_return))| Candidate { level: l.clone(), score, max_return })
            .collect())
    }

    fn update(&self, student: &mut AgentState, batch: &UpdateBatch) -> Result<UpdateStats, RunnerError> {
        Ok(self.agent.update(student, batch, self.shared.fold_in(3), self.reducer)?)
    }

    fn steps(&self, lanes: usize) -> u64 {
        (lanes * self.spec.rollout_length) as u64
    }
}

/// Indices of the `q` highest scores (earlier index first on ties).
fn top_q(scores: &[f32], q: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(q);
    order
}

fn dr_iteration(ctx: &ShardCtx, student: &mut AgentState) -> Result<ShardStats, RunnerError> {
    let n = ctx.spec.n_envs;
    let benv = BatchEnv::new(AutoReset(ctx.env.clone()), BatchShape::envs(n)?);
    let (mut bs, obs) = benv.reset(ctx.local.fold_in(0))?;
    let mut st = ShardStats::new(IterMode::Dr);
    st.trained_levels = benv.levels(&bs);
    let carry = Carry::fresh(obs, ctx.agent.net.hidden_dim());
    let out = rollout(ctx.local.fold_in(2), &ctx.agent.net, &[&student.params], &benv, &mut bs, carry, ctx.spec.rollout_length, ActionMode::Sample)?;
    let batch = ctx.agent.batch(out.trajs.into_iter().next().expect("single member"));
    st.update = Some(ctx.update(student, &batch)?);
    st.episodes = out.episodes;
    st.lanes = [n, 0, 0];
    st.env_steps = ctx.steps(n);
    Ok(st)
}

fn plr_iteration(ctx: &ShardCtx, student: &mut AgentState, buffer: &mut LevelBuffer<MazeLevel>) -> Result<ShardStats, RunnerError> {
    let n = ctx.spec.n_envs;
    let cfg = &ctx.spec.plr;
    let nonempty = all_true(ctx.reducer, !buffer.is_empty());
    match sample_decision(ctx.shared.fold_in(0), nonempty, cfg.replay_rate) {
        Branch::New => {
            let mut st = ShardStats::new(IterMode::New);
            let levels = ctx.fresh_levels(n, 0)?;
            let (batch, episodes) = ctx.play(student, &levels, ctx.local.fold_in(2))?;
            st.new_candidates = ctx.score(buffer, &batch, &levels)?;
            buffer.update(&st.new_candidates, ctx.iteration);
            if !cfg.robust {
                st.update = Some(ctx.update(student, &batch)?);
            }
            st.episodes = episodes;
            st.trained_levels = levels;
            st.lanes = [n, 0, 0];
            st.env_steps = ctx.steps(n);
            Ok(st)
        }
        Branch::Replay => {
            let mut st = ShardStats::new(IterMode::Replay);
            st.replay_indices = buffer.sample(ctx.local.fold_in(1), n, cfg, ctx.iteration)?;
            let levels: Vec<MazeLevel> = st.replay_indices.iter().map(|&i| buffer.entries()[i].level.clone()).collect();
            let (batch, episodes) = ctx.play(student, &levels, ctx.local.fold_in(2))?;
            st.update = Some(ctx.update(student, &batch)?);
            st.replay_candidates = ctx.score(buffer, &batch, &levels)?;
            buffer.update(&st.replay_candidates, ctx.iteration);
            st.lanes = [0, n, 0];
            st.env_steps = ctx.steps(n);
            if ctx.spec.kind.uses_mutations() {
                let accel = &ctx.spec.accel;
                let scores: Vec<f32> = st.replay_candidates.iter().map(|c| c.score).collect();
                st.mutant_parents = top_q(&scores, accel.subsample_size);
                let km = ctx.local.fold_in(4);
                let mutants = st
                    .mutant_parents
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| ctx.mutator.mutate(km.fold_in(k as u64), &levels[p], accel.n_mutations))
                    .collect::<Result<Vec<_>, _>>()?;
                let (mbatch, _) = ctx.play(student, &mutants, ctx.local.fold_in(5))?;
                st.mutant_candidates = ctx.score(buffer, &mbatch, &mutants)?;
                buffer.update(&st.mutant_candidates, ctx.iteration);
                st.lanes[2] = mutants.len();
                st.env_steps += ctx.steps(mutants.len());
            }
            st.episodes = episodes;
            st.trained_levels = levels;
            Ok(st)
        }
    }
}

fn parallel_iteration(ctx: &ShardCtx, student: &mut AgentState, buffer: &mut LevelBuffer<MazeLevel>) -> Result<ShardStats, RunnerError> {
    let n = ctx.spec.n_envs;
    let cfg = &ctx.spec.plr;
    let groups = if ctx.spec.kind.uses_mutations() { 3 } else { 2 };
    let nonempty = all_true(ctx.reducer, !buffer.is_empty());
    if !nonempty {
        let mut st = ShardStats::new(IterMode::Bootstrap);
        let levels = ctx.fresh_levels(groups * n, 0)?;
        let (batch, episodes) = ctx.play(student, &levels, ctx.local.fold_in(2))?;
        st.new_candidates = ctx.score(buffer, &batch, &levels)?;
        buffer.update(&st.new_candidates, ctx.iteration);
        if !cfg.robust {
            st.update = Some(ctx.update(student, &batch)?);
        }
        st.episodes = episodes;
        st.trained_levels = levels;
        st.lanes = [groups * n, 0, 0];
        st.env_steps = ctx.steps(groups * n);
        return Ok(st);
    }

    let mut st = ShardStats::new(IterMode::Parallel);
    let new_levels = ctx.fresh_levels(n, 0)?;
    st.replay_indices = buffer.sample(ctx.local.fold_in(1), n, cfg, ctx.iteration)?;
    let replay_levels: Vec<MazeLevel> = st.replay_indices.iter().map(|&i| buffer.entries()[i].level.clone()).collect();
    let mut mutants = Vec::new();
    if groups == 3 {
        let accel = &ctx.spec.accel;
        let scores: Vec<f32> = st.replay_indices.iter().map(|&i| buffer.entries()[i].score).collect();
        let parents = top_q(&scores, accel.subsample_size);
        let km = ctx.local.fold_in(4);
        for j in 0..n {
            let p = parents[j % parents.len()];
            st.mutant_parents.push(p);
            mutants.push(ctx.mutator.mutate(km.fold_in(j as u64), &replay_levels[p], accel.n_mutations)?);
        }
    }
    let mut levels = new_levels;
    levels.extend(replay_levels.iter().cloned());
    levels.extend(mutants);
    let (batch, episodes) = ctx.play(student, &levels, ctx.local.fold_in(2))?;
    let mut cands = ctx.score(buffer, &batch, &levels)?;
    st.mutant_candidates = cands.split_off(2 * n);
    st.replay_candidates = cands.split_off(n);
    st.new_candidates = cands;
    buffer.update(&st.new_candidates, ctx.iteration);
    buffer.update(&st.replay_candidates, ctx.iteration);
    buffer.update(&st.mutant_candidates, ctx.iteration);
    let update_batch = if cfg.robust { batch.select_lanes(&(n..2 * n).collect::<Vec<_>>()) } else { batch };
    st.update = Some(ctx.update(student, &update_batch)?);
    st.episodes = episodes;
    st.trained_levels = replay_levels;
    st.lanes = [n, n, if groups == 3 { n } else { 0 }];
    st.env_steps = ctx.steps(groups * n);
    Ok(st)
}

fn shard_iteration(ctx: &ShardCtx, student: &mut AgentState, buffer: &mut LevelBuffer<MazeLevel>) -> Result<ShardStats, RunnerError> {
    match ctx.spec.kind {
        RunnerKind::Dr => dr_iteration(ctx, student),
        RunnerKind::Plr | RunnerKind::Accel => plr_iteration(ctx, student, buffer),
        RunnerKind::PlrParallel | RunnerKind::AccelParallel => parallel_iteration(ctx, student, buffer),
        RunnerKind::Paired => Err(RunnerError::Config("paired is not a student-only runner".into())),
    }
}

/// DR, PLR, ACCEL, PLR∥ and ACCEL∥ with `n_shards` data-parallel shards,
/// each owning `n_envs` lanes and a buffer of `buffer_size / n_shards`.
pub struct StudentRunner {
    spec: RunnerSpec,
    env: AMaze,
    agent: PpoAgent,
    student: AgentState,
    buffers: Vec<LevelBuffer<MazeLevel>>,
    root: Key,
    iteration: u64,
    env_steps: u64,
    mutator: Arc<dyn LevelMutator>,
    last: Vec<ShardStats>,
}

impl StudentRunner {
    pub fn new(spec: RunnerSpec) -> Result<Self, RunnerError> {
        let mutator = Arc::new(MazeMutator { goal_relocation_prob: spec.accel.goal_relocation_prob });
        Self::with_mutator(spec, mutator)
    }

    pub fn with_mutator(spec: RunnerSpec, mutator: Arc<dyn LevelMutator>) -> Result<Self, RunnerError> {
        spec.validate()?;
        if spec.kind == RunnerKind::Paired {
            return Err(RunnerError::Config("use PairedRunner for paired".into()));
        }
        let env = AMaze::new(spec.env.clone())?;
        let model = ued_agents::ModelSpec::new(env.obs_spec(), env.num_actions(), spec.model.clone());
        let agent = PpoAgent::new(model, spec.ppo.clone())?;
        let root = Key::new(spec.seed);
        let student = agent.init(root.fold_in(u64::MAX));
        let per_shard = if spec.kind.uses_buffer() { spec.plr.buffer_size / spec.n_shards } else { 0 };
        let buffers = (0..spec.n_shards).map(|_| LevelBuffer::new(per_shard)).collect();
        Ok(StudentRunner { spec, env, agent, student, buffers, root, iteration: 0, env_steps: 0, mutator, last: Vec::new() })
    }

    pub fn spec(&self) -> &RunnerSpec {
        &self.spec
    }

    pub fn agent(&self) -> &PpoAgent {
        &self.agent
    }

    pub fn student(&self) -> &AgentState {
        &self.student
    }

    pub fn student_mut(&mut self) -> &mut AgentState {
        &mut self.student
    }

    pub fn buffers(&self) -> &[LevelBuffer<MazeLevel>] {
        &self.buffers
    }

    pub fn buffers_mut(&mut self) -> &mut [LevelBuffer<MazeLevel>] {
        &mut self.buffers
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn set_counters(&mut self, iteration: u64, env_steps: u64) {
        self.iteration = iteration;
        self.env_steps = env_steps;
    }

    /// Per-shard details of the most recent iteration.
    pub fn last_shard_stats(&self) -> &[ShardStats] {
        &self.last
    }

    /// Runs one iteration across all shards.
    pub fn iterate(&mut self) -> Result<IterationRecord, RunnerError> {
        let it_key = self.root.fold_in(self.iteration);
        let shared = it_key.fold_in(0);
        let d = self.spec.n_shards;
        let stats = if d == 1 {
            let ctx = ShardCtx {
                spec: &self.spec,
                env: &self.env,
                agent: &self.agent,
                mutator: self.mutator.as_ref(),
                iteration: self.iteration,
                shared,
                local: it_key.fold_in(1).fold_in(0),
                reducer: &LocalReducer,
            };
            vec![shard_iteration(&ctx, &mut self.student, &mut self.buffers[0])?]
        } else {
            self.sharded_iteration(it_key)?
        };
        self.iteration += 1;
        self.env_steps += stats.iter().map(|s| s.env_steps).sum::<u64>();
        let record = self.record(&stats);
        self.last = stats;
        Ok(record)
    }

    fn sharded_iteration(&mut self, it_key: Key) -> Result<Vec<ShardStats>, RunnerError> {
        let d = self.spec.n_shards;
        let comm = ShardComm::new(d);
        let mut students: Vec<AgentState> = (0..d).map(|_| self.student.clone()).collect();
        let results: Vec<Result<ShardStats, RunnerError>> = std::thread::scope(|s| {
            let handles: Vec<_> = students
                .iter_mut()
                .zip(self.buffers.iter_mut())
                .enumerate()
                .map(|(rank, (student, buffer))| {
                    let handle = ShardHandle { comm: comm.clone(), rank };
                    let (spec, env, agent, mutator, iteration) = (&self.spec, &self.env, &self.agent, self.mutator.as_ref(), self.iteration);
                    s.spawn(move || {
                        let ctx = ShardCtx {
                            spec,
                            env,
                            agent,
                            mutator,
                            iteration,
                            shared: it_key.fold_in(0),
                            local: it_key.fold_in(1).fold_in(rank as u64),
                            reducer: &handle,
                        };
                        let r = shard_iteration(&ctx, student, buffer);
                        if r.is_err() {
                            handle.comm.abort();
                        }
                        r
                    })
                })
                .collect();
            handles
                .into_iter()
                .enumerate()
                .map(|(rank, h)| {
                    h.join().unwrap_or_else(|_| Err(RunnerError::Shard { shard: rank, msg: "aborted".into() }))
                })
                .collect()
        });
        // prefer the originating error over secondary aborts
        if let Some(pos) = results.iter().position(|r| matches!(r, Err(e) if !matches!(e, RunnerError::Shard { .. }))) {
            return Err(results.into_iter().nth(pos).unwrap().unwrap_err());
        }
        let stats = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        for (shard, s) in students.iter().enumerate().skip(1) {
            let diff = s
                .params
                .data
                .iter()
                .zip(&students[0].params.data)
                .map(|(a, b)| (a - b).abs() as f64)
                .fold(0.0, f64::max);
            if diff > 1e-6 {
                return Err(RunnerError::ShardDivergence { shard, max_abs_diff: diff });
            }
        }
        self.student = students.swap_remove(0);
        Ok(stats)
    }

    fn record(&self, stats: &[ShardStats]) -> IterationRecord {
        let mut r = IterationRecord {
            iteration: self.iteration,
            env_steps: self.env_steps,
            mode: stats[0].mode.name().to_string(),
            ..Default::default()
        };
        let episodes: Vec<EpisodeRecord> = stats.iter().flat_map(|s| s.episodes.iter().copied()).collect();
        r.set_episodes(&episodes);
        if let Some(u) = &stats[0].update {
            r.set_update(u);
        }
        for s in stats {
            r.lanes_new += s.lanes[0];
            r.lanes_replay += s.lanes[1];
            r.lanes_mutant += s.lanes[2];
        }
        r.set_levels(&summarize_levels(stats.iter().flat_map(|s| s.trained_levels.iter())));
        let spl = |c: &mut dyn Iterator<Item = &Candidate<MazeLevel>>| {
            let s = summarize_levels(c.map(|c| &c.level));
            (s.count > 0).then_some(s.mean_shortest_path)
        };
        r.new_levels_shortest_path = spl(&mut stats.iter().flat_map(|s| s.new_candidates.iter()));
        r.replay_levels_shortest_path = spl(&mut stats.iter().flat_map(|s| s.replay_candidates.iter()));
        if self.spec.kind == RunnerKind::Dr {
            r.new_levels_shortest_path = Some(r.mean_shortest_path);
        }
        if self.spec.kind.uses_buffer() {
            let (mut size, mut sum, mut max) = (0usize, 0.0f64, 0.0f64);
            for b in &self.buffers {
                let (n, mean, mx) = b.stats();
                size += n;
                sum += mean * n as f64;
                max = max.max(mx);
            }
            r.buffer_size = size;
            r.buffer_mean_score = if size > 0 { sum / size as f64 } else { 0.0 };
            r.buffer_max_score = max;
        }
        r
    }
}
