use crate::env::Action;
use crate::error::NnError;

use super::params::{LinearParams, LstmParams, Network};
use super::scalar::{dot, Scalar};

/// Recurrent state `(h, c)`; zero at the start of every episode.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            h: vec![T::ZERO; hidden_size],
            c: vec![T::ZERO; hidden_size],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.h.len()
    }
}

/// Forward intermediates of one LSTM step, kept for backpropagation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepCache<T> {
    pub input: Vec<T>,
    /// Activated gates `[i, f, g, o]`, each of length H.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

/// A recorded forward pass over one episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForwardTrace<T> {
    pub steps: Vec<StepCache<T>>,
    pub q: Vec<[T; Action::COUNT]>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn lstm_step<T: Scalar>(
    params: &LstmParams<T>,
    state: &LstmState<T>,
    input: &[T],
) -> Result<LstmState<T>, NnError> {
    let mut next = state.clone();
    let mut cache = StepCache::default();
    lstm_step_cached(params, &mut next, input, &mut cache)?;
    Ok(next)
}

/// Advances `state` in place and records the step into `cache`.
pub fn lstm_step_cached<T: Scalar>(
    params: &LstmParams<T>,
    state: &mut LstmState<T>,
    input: &[T],
    cache: &mut StepCache<T>,
) -> Result<(), NnError> {
    let h = params.hidden_size();
    if input.len() != params.input_size() {
        return Err(NnError::shape("lstm_step input", params.input_size(), input.len()));
    }
    if state.h.len() != h || state.c.len() != h {
        return Err(NnError::shape("lstm_step state", h, state.h.len()));
    }

    let gates = &mut cache.gates;
    gates.clear();
    gates.extend_from_slice(&params.bias);
    for (r, z) in gates.iter_mut().enumerate() {
        *z += dot(params.input_weights.row(r), input) + dot(params.recurrent_weights.row(r), &state.h);
    }
    for (k, z) in gates.iter_mut().enumerate() {
        *z = if k / h == 2 { z.tanh() } else { z.sigmoid() };
    }

    let (i, rest) = gates.split_at(h);
    let (f, rest) = rest.split_at(h);
    let (g, o) = rest.split_at(h);
    cache.c.clear();
    cache.tanh_c.clear();
    cache.h.clear();
    for j in 0..h {
        let c = f[j] * state.c[j] + i[j] * g[j];
        let tc = c.tanh();
        cache.c.push(c);
        cache.tanh_c.push(tc);
        cache.h.push(o[j] * tc);
    }
    if !cache.h.iter().chain(&cache.c).all(|v| v.is_finite()) {
        return Err(NnError::NonFinite("lstm_step"));
    }
    cache.input.clear();
    cache.input.extend_from_slice(input);
    state.h.copy_from_slice(&cache.h);
    state.c.copy_from_slice(&cache.c);
    Ok(())
}

/// Runs a whole input sequence from the zero state, recording every step.
pub fn forward_sequence<T: Scalar>(net: &Network<T>, inputs: &[Vec<T>]) -> Result<ForwardTrace<T>, NnError> {
    let mut state = LstmState::zeros(net.hidden_size());
    let mut trace = ForwardTrace::default();
    for x in inputs {
        let mut cache = StepCache::default();
        lstm_step_cached(&net.lstm, &mut state, x, &mut cache)?;
        trace.q.push(q_head(&net.head, &state.h)?);
        trace.steps.push(cache);
    }
    Ok(trace)
}

pub fn q_head<T: Scalar>(head: &LinearParams<T>, h: &[T]) -> Result<[T; Action::COUNT], NnError> {
    if h.len() != head.weights.cols() {
        return Err(NnError::shape("q_head", head.weights.cols(), h.len()));
    }
    Ok(std::array::from_fn(|a| dot(head.weights.row(a), h) + head.bias[a]))
}
