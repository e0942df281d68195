use crate::error::NnError;

use super::params::{Gradients, Network};
use super::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam with per-parameter moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub first_moment: Network<T>,
    pub second_moment: Network<T>,
    pub step_count: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, like: &Network<T>) -> Self {
        Self {
            config,
            first_moment: like.zeros_like(),
            second_moment: like.zeros_like(),
            step_count: 0,
        }
    }

    pub fn step(&mut self, params: &mut Network<T>, grads: &Gradients<T>) -> Result<(), NnError> {
        if !params.same_shape(grads) || !params.same_shape(&self.first_moment) {
            return Err(NnError::shape(
                "adam_step",
                format!("D={} H={}", params.input_size(), params.hidden_size()),
                format!("D={} H={}", grads.input_size(), grads.hidden_size()),
            ));
        }
        self.step_count += 1;
        let c = self.config;
        let t = self.step_count as i32;
        let b1 = T::from_f64(c.beta1);
        let b2 = T::from_f64(c.beta2);
        let one_b1 = T::from_f64(1.0 - c.beta1);
        let one_b2 = T::from_f64(1.0 - c.beta2);
        let corr1 = T::from_f64(1.0 / (1.0 - c.beta1.powi(t)));
        let corr2 = T::from_f64(1.0 / (1.0 - c.beta2.powi(t)));
        let lr = T::from_f64(c.learning_rate);
        let eps = T::from_f64(c.epsilon);

        let p = params.tensors_mut();
        let m = self.first_moment.tensors_mut();
        let v = self.second_moment.tensors_mut();
        for (((p, m), v), g) in p.into_iter().zip(m).zip(v).zip(grads.tensors()) {
            for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                let m_hat = *m * corr1;
                let v_hat = *v * corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Rescales `grads` so its global norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(T::from_f64(max_norm / norm));
    }
    norm
}
