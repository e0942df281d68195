//! Running one episode with a pair of controllers.

use crate::env::{
    Action, Collection, Env, Lineup, Observation, Reward, Role, SpawnScript, TaskSpec,
};
use crate::error::TrainError;
use crate::policy::Controller;
use crate::rng::EpisodeRng;

/// Everything observable about one finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub task: TaskSpec,
    pub script: SpawnScript,
    pub lineup: Lineup,
    /// Observations the prime acted on, one per step.
    pub prime_obs: Vec<Observation>,
    /// Empty when the helper is absent.
    pub helper_obs: Vec<Observation>,
    pub prime_actions: Vec<Action>,
    pub helper_actions: Vec<Action>,
    pub rewards: Vec<Reward>,
    /// `(step, collection)`; `step` is the index of the action that collected.
    pub collections: Vec<(usize, Collection)>,
    pub expired: Vec<usize>,
}

/// Per-episode totals. `prime_collect + helper_collect − 0.1·prime_moves`
/// equals `total` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpisodeSummary {
    pub total: Reward,
    pub prime_collect: Reward,
    pub helper_collect: Reward,
    pub prime_moves: usize,
    pub helper_moves: usize,
    pub good_collected: usize,
    pub bad_collected: usize,
}

impl EpisodeRecord {
    pub fn summary(&self) -> EpisodeSummary {
        let mut s = EpisodeSummary {
            total: self.rewards.iter().copied().sum(),
            prime_moves: self.prime_actions.iter().filter(|a| a.is_move()).count(),
            helper_moves: self.helper_actions.iter().filter(|a| a.is_move()).count(),
            ..Default::default()
        };
        for (_, c) in &self.collections {
            match c.collector {
                Role::Prime => s.prime_collect += c.reward(),
                Role::Helper => s.helper_collect += c.reward(),
            }
            if c.good {
                s.good_collected += 1;
            } else {
                s.bad_collected += 1;
            }
        }
        s
    }

    pub fn rewards_f32(&self) -> Vec<f32> {
        self.rewards.iter().map(|r| r.as_f32()).collect()
    }

    pub fn collected_by(&self, object: usize) -> Option<Role> {
        self.collections
            .iter()
            .find(|(_, c)| c.object == object)
            .map(|(_, c)| c.collector)
    }
}

/// Runs a full episode. In `PrimeAlone` episodes the helper is never asked to act.
pub fn run_episode<P: Controller + ?Sized, H: Controller + ?Sized>(
    task: TaskSpec,
    script: SpawnScript,
    lineup: Lineup,
    prime: &mut P,
    helper: &mut H,
    rng: &mut EpisodeRng,
) -> Result<EpisodeRecord, TrainError> {
    let (mut env, mut prime_obs, mut helper_obs) = Env::reset_with(task, script.clone(), lineup);
    let joint = lineup == Lineup::Joint;
    prime.begin_episode(&task);
    if joint {
        helper.begin_episode(&task);
    }
    let mut rec = EpisodeRecord {
        task,
        script,
        lineup,
        prime_obs: Vec::with_capacity(crate::env::EPISODE_STEPS),
        helper_obs: Vec::new(),
        prime_actions: Vec::with_capacity(crate::env::EPISODE_STEPS),
        helper_actions: Vec::new(),
        rewards: Vec::with_capacity(crate::env::EPISODE_STEPS),
        collections: Vec::new(),
        expired: Vec::new(),
    };
    loop {
        let pa = prime.act(&prime_obs, rng)?;
        let ha = if joint { helper.act(&helper_obs, rng)? } else { Action::Stay };
        let step = env.step(pa, ha)?;
        let t = rec.rewards.len();
        rec.prime_obs.push(std::mem::replace(&mut prime_obs, step.prime_obs));
        rec.prime_actions.push(pa);
        if joint {
            rec.helper_obs.push(std::mem::replace(&mut helper_obs, step.helper_obs));
            rec.helper_actions.push(ha);
        }
        rec.rewards.push(step.reward);
        rec.collections.extend(step.collections.into_iter().map(|c| (t, c)));
        rec.expired.extend(step.expired);
        if step.done {
            return Ok(rec);
        }
    }
}
