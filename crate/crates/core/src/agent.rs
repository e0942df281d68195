//! Acting agents: a recurrent Q-network plus greedy / ε-greedy selection.

use rand::Rng;

use crate::env::{Action, Observation, Role};
use crate::error::NnError;
use crate::nn::{init_params, lstm_step_cached, q_head, LstmState, Network, Scalar, StepCache};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMode {
    Greedy,
    /// With probability ε an action is drawn uniformly from all three.
    EpsilonGreedy(f64),
}

impl SelectionMode {
    pub const TRAINING: SelectionMode = SelectionMode::EpsilonGreedy(0.05);
}

/// One agent's recurrent Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet<T = f32> {
    pub role: Role,
    pub net: Network<T>,
}

impl<T: Scalar> PolicyNet<T> {
    pub fn new(role: Role, net: Network<T>) -> Result<Self, NnError> {
        net.validate()?;
        if net.input_size() != role.obs_len() {
            return Err(NnError::shape("PolicyNet input", role.obs_len(), net.input_size()));
        }
        Ok(Self { role, net })
    }

    pub fn init<R: Rng + ?Sized>(rng: &mut R, role: Role, hidden_size: usize) -> Self {
        Self {
            role,
            net: init_params(rng, role.obs_len(), hidden_size),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.net.hidden_size()
    }

    pub fn reset_state(&self) -> LstmState<T> {
        LstmState::zeros(self.hidden_size())
    }

    /// Runs one step of the network and selects an action.
    ///
    /// `cache` receives the forward intermediates of the step.
    pub fn act<R: Rng + ?Sized>(
        &self,
        state: &mut LstmState<T>,
        obs: &Observation,
        mode: SelectionMode,
        rng: &mut R,
        cache: &mut StepCache<T>,
    ) -> Result<(Action, [T; Action::COUNT]), NnError> {
        if obs.role() != self.role {
            return Err(NnError::shape("act observation role", self.role.as_str(), obs.role().as_str()));
        }
        let input: Vec<T> = obs.bits().iter().map(|&b| T::from(b)).collect();
        lstm_step_cached(&self.net.lstm, state, &input, cache)?;
        let q = q_head(&self.net.head, &state.h)?;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite("q_head"));
        }
        Ok((select(&q, mode, rng), q))
    }
}

/// Highest Q, ties broken toward the lowest action index.
pub fn greedy<T: Scalar>(q: &[T; Action::COUNT]) -> Action {
    let mut best = 0;
    for a in 1..Action::COUNT {
        if q[a] > q[best] {
            best = a;
        }
    }
    Action::ALL[best]
}

pub fn select<T: Scalar, R: Rng + ?Sized>(q: &[T; Action::COUNT], mode: SelectionMode, rng: &mut R) -> Action {
    match mode {
        SelectionMode::Greedy => greedy(q),
        SelectionMode::EpsilonGreedy(eps) => {
            if rng.random::<f64>() < eps {
                Action::ALL[rng.random_range(0..Action::COUNT)]
            } else {
                greedy(q)
            }
        }
    }
}
