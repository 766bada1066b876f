//! PAIRED with a population of students: a learned teacher designs levels
//! and is paid the population regret (best minus mean student return).

use ued_agents::{rollout, ActionMode, AgentPop, AgentState, Carry, LocalReducer, ModelSpec, PpoAgent, PpoConfig, UpdateBatch};
use ued_core::maze::{AMaze, MazeDesigner, MazeLevel};
use ued_core::wrappers::AutoReplay;
use ued_core::{BatchEnv, BatchShape, Environment, Key, LevelDesigner};

use crate::config::{RunnerKind, RunnerSpec};
use crate::error::RunnerError;
use crate::record::{summarize_levels, IterationRecord};
use crate::score::{episode_returns, population_regret};

/// Details of the last PAIRED iteration.
#[derive(Clone, Debug, Default)]
pub struct PairedStats {
    pub levels: Vec<MazeLevel>,
    /// `[student][level]` mean episodic return (0 when no episode finished).
    pub returns: Vec<Vec<f32>>,
    pub teacher_rewards: Vec<f32>,
}

pub struct PairedRunner {
    spec: RunnerSpec,
    env: AMaze,
    designer: MazeDesigner,
    students: AgentPop,
    student_states: Vec<AgentState>,
    teacher: PpoAgent,
    teacher_state: AgentState,
    root: Key,
    iteration: u64,
    env_steps: u64,
    last: PairedStats,
}

impl PairedRunner {
    pub fn new(spec: RunnerSpec) -> Result<Self, RunnerError> {
        spec.validate()?;
        if spec.kind != RunnerKind::Paired {
            return Err(RunnerError::Config(format!("PairedRunner cannot run {:?}", spec.kind)));
        }
        let env = AMaze::new(spec.env.clone())?;
        let designer = MazeDesigner::new(spec.env.clone())?;
        let student_model = ModelSpec::new(env.obs_spec(), env.num_actions(), spec.model.clone());
        let students = AgentPop::new(PpoAgent::new(student_model, spec.ppo.clone())?, spec.paired.n_students)?;
        let teacher_model = ModelSpec::new(designer.obs_spec(), designer.num_actions(), spec.model.clone());
        let teacher_cfg = PpoConfig { entropy_coef: spec.paired.teacher_entropy_coef, ..spec.ppo.clone() };
        let teacher = PpoAgent::new(teacher_model, teacher_cfg)?;
        let root = Key::new(spec.seed);
        let student_states = students.init(root.fold_in(u64::MAX));
        let teacher_state = teacher.init(root.fold_in(u64::MAX - 1));
        Ok(PairedRunner {
            spec,
            env,
            designer,
            students,
            student_states,
            teacher,
            teacher_state,
            root,
            iteration: 0,
            env_steps: 0,
            last: PairedStats::default(),
        })
    }

    pub fn spec(&self) -> &RunnerSpec {
        &self.spec
    }

    pub fn students(&self) -> &AgentPop {
        &self.students
    }

    pub fn student_states(&self) -> &[AgentState] {
        &self.student_states
    }

    pub fn student_states_mut(&mut self) -> &mut [AgentState] {
        &mut self.student_states
    }

    pub fn teacher(&self) -> &PpoAgent {
        &self.teacher
    }

    pub fn teacher_state(&self) -> &AgentState {
        &self.teacher_state
    }

    pub fn teacher_state_mut(&mut self) -> &mut AgentState {
        &mut self.teacher_state
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

    pub fn last_stats(&self) -> &PairedStats {
        &self.last
    }

    /// Teacher payoff per level from `[student][level]` returns.
    pub fn teacher_rewards(returns: &[Vec<f32>], minimax: bool) -> Vec<f32> {
        let n_levels = returns.first().map_or(0, Vec::len);
        (0..n_levels)
            .map(|j| {
                if minimax {
                    -returns[0][j]
                } else {
                    population_regret(&returns.iter().map(|r| r[j]).collect::<Vec<_>>())
                }
            })
            .collect()
    }

    pub fn iterate(&mut self) -> Result<IterationRecord, RunnerError> {
        let k = self.root.fold_in(self.iteration);
        let n = self.spec.n_envs;
        let n_students = self.students.n;

        // teacher designs one level per lane
        let tenv = BatchEnv::new(self.designer.clone(), BatchShape::envs(n)?);
        let (mut ts, tobs) = tenv.reset(k.fold_in(0))?;
        let design_steps = self.designer.max_episode_steps();
        let tout = rollout(
            k.fold_in(1),
            &self.teacher.net,
            &[&self.teacher_state.params],
            &tenv,
            &mut ts,
            Carry::fresh(tobs, self.teacher.net.hidden_dim()),
            design_steps,
            ActionMode::Sample,
        )?;
        let levels = ts.states.iter().map(|s| self.designer.design(s)).collect::<Result<Vec<_>, _>>()?;

        // every student plays every level
        let senv = BatchEnv::new(AutoReplay(self.env.clone()), BatchShape::new(n_students, 1, n)?);
        let (mut ss, sobs) = senv.reset_to_levels(&levels)?;
        let sout = self.students.rollout(
            k.fold_in(2),
            &self.student_states,
            &senv,
            &mut ss,
            Carry::fresh(sobs, self.students.agent.net.hidden_dim()),
            self.spec.rollout_length,
            ActionMode::Sample,
        )?;
        let returns: Vec<Vec<f32>> = sout
            .trajs
            .iter()
            .map(|t| {
                (0..n)
                    .map(|j| {
                        let r = episode_returns(&t.lane_series(&t.rewards, j), &t.lane_series(&t.dones, j), None);
                        if r.is_empty() {
                            0.0
                        } else {
                            r.iter().sum::<f32>() / r.len() as f32
                        }
                    })
                    .collect()
            })
            .collect();
        let rewards = Self::teacher_rewards(&returns, self.spec.paired.minimax);

        let mut ttraj = tout.trajs.into_iter().next().expect("single teacher");
        let last = ttraj.len - 1;
        for (j, &r) in rewards.iter().enumerate() {
            ttraj.rewards[last * n + j] += r;
        }
        let tbatch = self.teacher.batch(ttraj);
        let tstats = self.teacher.update(&mut self.teacher_state, &tbatch, k.fold_in(3), &LocalReducer)?;
        let batches: Vec<UpdateBatch> = sout.trajs.into_iter().map(|t| self.students.agent.batch(t)).collect();
        let sstats = self.students.update(&mut self.student_states, &batches, k.fold_in(4), &LocalReducer)?;

        self.iteration += 1;
        self.env_steps += (n_students * n * self.spec.rollout_length) as u64;

        let mut r = IterationRecord {
            iteration: self.iteration,
            env_steps: self.env_steps,
            mode: "paired".into(),
            lanes_new: n,
            ..Default::default()
        };
        let per = n;
        let student0: Vec<_> = sout.episodes.iter().copied().filter(|e| e.lane < per).collect();
        r.set_episodes(&student0);
        r.set_update(&sstats[0]);
        let summary = summarize_levels(levels.iter());
        r.set_levels(&summary);
        r.new_levels_shortest_path = Some(summary.mean_shortest_path);
        r.teacher_regret = Some(rewards.iter().map(|&x| x as f64).sum::<f64>() / rewards.len() as f64);
        r.teacher_entropy = Some(tstats.entropy);
        self.last = PairedStats { levels, returns, teacher_rewards: rewards };
        Ok(r)
    }
}
