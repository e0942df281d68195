//! Episodic one-step Q-learning loss without a target network.
//!
//! `L = Σ_t (q_t[a_t] − y_t)²` with `y_t = r_t + γ·max q_{t+1}` and a zero
//! bootstrap at the final step. Targets are treated as constants.

use crate::env::Action;
use crate::error::NnError;

use super::scalar::Scalar;

fn check_lengths(q: usize, actions: usize, rewards: usize) -> Result<(), NnError> {
    if q != actions || q != rewards {
        return Err(NnError::shape(
            "episode_loss",
            format!("equal lengths (q={q})"),
            format!("actions={actions}, rewards={rewards}"),
        ));
    }
    Ok(())
}

fn max3<T: Scalar>(q: &[T; 3]) -> T {
    let mut m = q[0];
    for &v in &q[1..] {
        if v > m {
            m = v;
        }
    }
    m
}

pub fn td_targets<T: Scalar>(q: &[[T; Action::COUNT]], rewards: &[T], gamma: T) -> Vec<T> {
    let n = q.len();
    (0..n)
        .map(|t| {
            if t + 1 < n {
                rewards[t] + gamma * max3(&q[t + 1])
            } else {
                rewards[t]
            }
        })
        .collect()
}

pub fn episode_loss<T: Scalar>(
    q: &[[T; Action::COUNT]],
    actions: &[Action],
    rewards: &[T],
    gamma: T,
) -> Result<T, NnError> {
    check_lengths(q.len(), actions.len(), rewards.len())?;
    let targets = td_targets(q, rewards, gamma);
    let mut loss = T::ZERO;
    for ((qt, a), y) in q.iter().zip(actions).zip(targets) {
        let e = qt[a.index()] - y;
        loss += e * e;
    }
    Ok(loss)
}

/// `∂L/∂q_t[a_t]` for every step; all other Q components have zero gradient.
pub fn q_gradient<T: Scalar>(
    q: &[[T; Action::COUNT]],
    actions: &[Action],
    rewards: &[T],
    gamma: T,
) -> Result<Vec<T>, NnError> {
    check_lengths(q.len(), actions.len(), rewards.len())?;
    let two = T::ONE + T::ONE;
    let targets = td_targets(q, rewards, gamma);
    Ok(q
        .iter()
        .zip(actions)
        .zip(targets)
        .map(|((qt, a), y)| two * (qt[a.index()] - y))
        .collect())
}
