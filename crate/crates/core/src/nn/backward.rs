//! Reverse-mode gradient of the episode loss through time.

use crate::env::Action;
use crate::error::NnError;

use super::loss::{episode_loss, q_gradient};
use super::lstm::ForwardTrace;
use super::params::{Gradients, Network};
use super::scalar::{axpy, Scalar};

/// Returns the episode loss and its gradient w.r.t. every parameter.
pub fn backward<T: Scalar>(
    net: &Network<T>,
    trace: &ForwardTrace<T>,
    actions: &[Action],
    rewards: &[T],
    gamma: T,
) -> Result<(T, Gradients<T>), NnError> {
    let mut grads = net.zeros_like();
    let loss = backward_into(net, trace, actions, rewards, gamma, &mut grads)?;
    Ok((loss, grads))
}

/// Accumulates the episode gradient into `grads` and returns the loss.
pub fn backward_into<T: Scalar>(
    net: &Network<T>,
    trace: &ForwardTrace<T>,
    actions: &[Action],
    rewards: &[T],
    gamma: T,
    grads: &mut Gradients<T>,
) -> Result<T, NnError> {
    if !net.same_shape(grads) {
        return Err(NnError::shape("backward grads", net.hidden_size(), grads.hidden_size()));
    }
    if trace.steps.len() != trace.q.len() {
        return Err(NnError::shape("backward trace", trace.q.len(), trace.steps.len()));
    }
    let loss = episode_loss(&trace.q, actions, rewards, gamma)?;
    let delta = q_gradient(&trace.q, actions, rewards, gamma)?;

    let h = net.hidden_size();
    let zeros = vec![T::ZERO; h];
    let mut dh_next = vec![T::ZERO; h];
    let mut dc_next = vec![T::ZERO; h];
    let mut dh = vec![T::ZERO; h];
    let mut dz = vec![T::ZERO; 4 * h];

    for t in (0..trace.steps.len()).rev() {
        let step = &trace.steps[t];
        if step.h.len() != h || step.input.len() != net.input_size() {
            return Err(NnError::shape("backward step", h, step.h.len()));
        }
        let a = actions[t].index();
        let d = delta[t];

        axpy(d, &step.h, grads.head.weights.row_mut(a));
        grads.head.bias[a] += d;

        dh.copy_from_slice(&dh_next);
        axpy(d, net.head.weights.row(a), &mut dh);

        let (h_prev, c_prev) = if t > 0 {
            (&trace.steps[t - 1].h[..], &trace.steps[t - 1].c[..])
        } else {
            (&zeros[..], &zeros[..])
        };
        let g = &step.gates;
        for j in 0..h {
            let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = step.tanh_c[j];
            let dc = dh[j] * o * (T::ONE - tc * tc) + dc_next[j];
            dz[j] = dc * gg * i * (T::ONE - i);
            dz[h + j] = dc * c_prev[j] * f * (T::ONE - f);
            dz[2 * h + j] = dc * i * (T::ONE - gg * gg);
            dz[3 * h + j] = dh[j] * tc * o * (T::ONE - o);
            dc_next[j] = dc * f;
        }

        grads.lstm.input_weights.add_outer(&dz, &step.input)?;
        grads.lstm.recurrent_weights.add_outer(&dz, h_prev)?;
        for (b, &v) in grads.lstm.bias.iter_mut().zip(&dz) {
            *b += v;
        }
        dh_next.iter_mut().for_each(|v| *v = T::ZERO);
        net.lstm.recurrent_weights.matvec_t_acc(&dz, &mut dh_next)?;
    }

    if !loss.is_finite() {
        return Err(NnError::NonFinite("episode loss"));
    }
    if !grads.is_finite() {
        return Err(NnError::NonFinite("backward"));
    }
    Ok(loss)
}
