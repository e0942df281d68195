//! Prime/helper foraging: a two-agent gridworld where only the prime knows
//! which object class is rewarding, recurrent Q-learning agents trained
//! jointly on the shared reward, and the evaluation harness around them.

pub mod agent;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod io;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod rollout;
pub mod trainer;

pub use error::{CheckpointError, ConfigError, EnvError, NnError, TrainError};
