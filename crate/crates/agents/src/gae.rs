//! Generalized advantage estimation over time-major `[T, B]` arrays.

use num_traits::Float;

/// Returns `(advantages, returns)`, both `[T, B]`. `dones[t]` marks that the
/// transition at `t` ended an episode, which cuts both the bootstrap and the
/// advantage recursion. `last_values` bootstraps the final step.
pub fn compute_gae<F: Float>(
    rewards: &[F],
    values: &[F],
    dones: &[bool],
    last_values: &[F],
    lanes: usize,
    gamma: F,
    lambda: F,
) -> (Vec<F>, Vec<F>) {
    let n = rewards.len();
    assert!(lanes > 0 && n % lanes == 0, "rewards length {n} is not a multiple of {lanes} lanes");
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    assert_eq!(last_values.len(), lanes);
    let t_len = n / lanes;
    let mut adv = vec![F::zero(); n];
    for b in 0..lanes {
        let mut next_adv = F::zero();
        let mut next_value = last_values[b];
        for t in (0..t_len).rev() {
            let i = t * lanes + b;
            let live = if dones[i] { F::zero() } else { F::one() };
            let delta = rewards[i] + gamma * live * next_value - values[i];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[i] = next_adv;
            next_value = values[i];
        }
    }
    let returns = adv.iter().zip(values).map(|(&a, &v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ued_core::Key;

    #[test]
    fn telescoping_sum() {
        let (a, r) = compute_gae(&[1.0, 1.0, 1.0], &[0.0; 3], &[false; 3], &[0.0], 1, 1.0, 1.0);
        assert_eq!(a, vec![3.0, 2.0, 1.0]);
        assert_eq!(r, a);
    }

    #[test]
    fn zero_discount_is_one_step() {
        let rw = [0.5, -1.0, 2.0, 0.0];
        let v = [0.1, 0.2, 0.3, 0.4];
        let (a, _) = compute_gae(&rw, &v, &[false, true, false, false], &[9.0, 9.0], 2, 0.0, 0.95);
        for i in 0..4 {
            assert!((a[i] - (rw[i] - v[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn lanes_are_independent() {
        let k = Key::new(4);
        let n = 40;
        let rw: Vec<f64> = (0..n).map(|i| k.fold_in(i).uniform()).collect();
        let v: Vec<f64> = (0..n).map(|i| k.fold_in(100 + i).uniform()).collect();
        let d: Vec<bool> = (0..n).map(|i| k.fold_in(200 + i).uniform() < 0.2).collect();
        let (a, _) = compute_gae(&rw, &v, &d, &[0.3, 0.7], 2, 0.9, 0.8);
        for b in 0..2 {
            let pick = |x: &[f64]| x.iter().skip(b).step_by(2).copied().collect::<Vec<_>>();
            let db: Vec<bool> = d.iter().skip(b).step_by(2).copied().collect();
            let (ab, _) = compute_gae(&pick(&rw), &pick(&v), &db, &[[0.3, 0.7][b]], 1, 0.9, 0.8);
            assert_eq!(ab, pick(&a));
        }
    }
}
