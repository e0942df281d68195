//! Dense numerical core: LSTM cell, linear Q head, the episodic Q-learning
//! loss, backpropagation through time and Adam.
//!
//! Everything is generic over [`Scalar`]; training runs in `f32`, gradient
//! checks in `f64`.

mod adam;
mod backward;
mod grad_check;
mod loss;
mod lstm;
mod matrix;
mod params;
mod scalar;

pub use adam::{clip_global_norm, Adam, AdamConfig};
pub use backward::{backward, backward_into};
pub use grad_check::{finite_diff_grad, finite_diff_network, max_relative_error};
pub use loss::{episode_loss, q_gradient, td_targets};
pub use lstm::{forward_sequence, lstm_step, lstm_step_cached, q_head, ForwardTrace, LstmState, StepCache};
pub use matrix::Matrix;
pub use params::{init_params, Gradients, LinearParams, LstmParams, Network, GATES};
pub use scalar::Scalar;
