//! Paired teacher/student environments for learned level design.

use crate::batch::{BatchEnv, BatchObs, BatchState};
use crate::env::{Environment, Extras, StepResult, Upomdp};
use crate::error::EnvError;
use crate::rng::Key;

/// A design MDP whose finished episodes decode into student levels.
pub trait LevelDesigner: Environment {
    type Level;

    /// The level described by a finished design episode.
    fn design(&self, state: &Self::State) -> Result<Self::Level, EnvError>;
}

#[derive(Clone, Debug)]
pub struct UedEnv<S, T> {
    pub student: S,
    pub teacher: T,
}

impl<S, T> UedEnv<S, T>
where
    S: Upomdp,
    T: LevelDesigner<Level = S::Level>,
{
    pub fn new(student: S, teacher: T) -> Self {
        UedEnv { student, teacher }
    }

    pub fn reset_teacher(&self, key: Key) -> Result<StepResult<T::State>, EnvError> {
        self.teacher.reset(key)
    }

    pub fn step_teacher(&self, key: Key, state: &T::State, action: usize) -> Result<StepResult<T::State>, EnvError> {
        self.teacher.step(key, state, action, Extras::new())
    }

    /// Starts the student on the level the teacher finished designing.
    pub fn reset_student(&self, teacher_state: &T::State) -> Result<StepResult<S::State>, EnvError> {
        let level = self.teacher.design(teacher_state)?;
        self.student.reset_to_level(&level)
    }

    pub fn batch_reset_student(
        &self,
        students: &BatchEnv<S>,
        teacher_states: &[T::State],
    ) -> Result<(BatchState<S::State>, BatchObs), EnvError>
    where
        S: Clone,
    {
        let levels = teacher_states.iter().map(|t| self.teacher.design(t)).collect::<Result<Vec<_>, _>>()?;
        students.reset_to_levels(&levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{AMaze, MazeDesigner, MazeLevel, StaticParams};
    use rand::Rng;

    fn pair(budget: usize) -> UedEnv<AMaze, MazeDesigner> {
        let p = StaticParams { wall_budget: budget, ..StaticParams::default() };
        UedEnv::new(AMaze::new(p.clone()).unwrap(), MazeDesigner::new(p).unwrap())
    }

    fn design(ued: &UedEnv<AMaze, MazeDesigner>, actions: &[usize]) -> StepResult<crate::maze::TeacherState> {
        let mut r = ued.reset_teacher(Key::new(0)).unwrap();
        for (i, &a) in actions.iter().enumerate() {
            r = ued.step_teacher(Key::new(i as u64), &r.state, a).unwrap();
        }
        r
    }

    #[test]
    fn zero_wall_design() {
        let ued = pair(0);
        let t = design(&ued, &[3, 40]);
        assert!(t.done);
        let s = ued.reset_student(&t.state).unwrap();
        assert_eq!(s.state.level.n_interior_walls(), 0);
        assert_eq!(s.state.time, 0);
        let level: MazeLevel = ued.student.get_env_state(&s.state);
        assert_eq!(ued.student.get_env_state(&ued.student.set_env_state(&level).unwrap()), level);
    }

    #[test]
    fn incomplete_design_rejected() {
        let ued = pair(3);
        let t = design(&ued, &[1, 2]);
        assert_eq!(ued.reset_student(&t.state).unwrap_err(), EnvError::IncompleteDesign);
    }

    #[test]
    fn random_designs_give_valid_students() {
        let ued = pair(60);
        for seed in 0..100 {
            let mut rng = Key::new(seed).stream();
            let actions: Vec<usize> = (0..62).map(|_| rng.random_range(0..121)).collect();
            let t = design(&ued, &actions);
            let s = ued.reset_student(&t.state).unwrap();
            s.state.level.validate().unwrap();
        }
    }
}
