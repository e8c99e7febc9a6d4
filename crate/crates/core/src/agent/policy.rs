use rand::Rng;

use crate::env::Command;
use crate::nn::{argmax, Real};

/// Greedy command: the pair maximising `(Q(a) + Q(o)) / 2`, which is the
/// independent argmax of each head (lowest index on ties).
pub fn greedy_command<T: Real>(q_action: &[T], q_object: &[T]) -> Command {
    Command::new(argmax(q_action), argmax(q_object))
}

/// ε-greedy selection. The exploration coin is drawn first; `scores` is
/// only evaluated on the greedy branch.
pub fn epsilon_greedy<T, R, F, E>(
    n_actions: usize,
    n_objects: usize,
    epsilon: f64,
    rng: &mut R,
    scores: F,
) -> Result<Command, E>
where
    T: Real,
    R: Rng + ?Sized,
    F: FnOnce() -> Result<(Vec<T>, Vec<T>), E>,
{
    if rng.gen::<f64>() < epsilon {
        Ok(Command::new(rng.gen_range(0..n_actions), rng.gen_range(0..n_objects)))
    } else {
        let (qa, qo) = scores()?;
        Ok(greedy_command(&qa, &qo))
    }
}

/// ε-greedy over precomputed scores.
pub fn select_command<T: Real, R: Rng + ?Sized>(q_action: &[T], q_object: &[T], epsilon: f64, rng: &mut R) -> Command {
    epsilon_greedy::<T, R, _, std::convert::Infallible>(q_action.len(), q_object.len(), epsilon, rng, || {
        Ok((q_action.to_vec(), q_object.to_vec()))
    })
    .unwrap_or_else(|e| match e {})
}

/// Value of the best command, `(max Q(a) + max Q(o)) / 2`.
pub fn best_pair_value<T: Real>(q_action: &[T], q_object: &[T]) -> T {
    let max = |v: &[T]| v.iter().copied().fold(T::neg_infinity(), T::max);
    (max(q_action) + max(q_object)) / T::from_f64(2.0)
}

/// `r` at terminal transitions, else `r + γ · max Q(s′; θ⁻)`.
pub fn td_target(reward: f64, done: bool, q_next_max: f64, gamma: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q_next_max
    }
}
