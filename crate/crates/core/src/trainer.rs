//! Joint meta-training of the prime and helper.
//!
//! Every update samples a fresh batch of (task, script) episodes, rolls both
//! agents out with ε-greedy exploration, and takes one Adam step per agent on
//! the summed episodic Q-learning loss of the shared reward stream. Recurrent
//! state is reset at every episode boundary, so the only thing carried across
//! episodes is the weights.

use std::fs;
use std::path::Path;

use crate::agent::{PolicyNet, SelectionMode};
use crate::env::{Lineup, Role, SpawnScript, TaskSpec};
use crate::error::{NnError, TrainError};
use crate::eval::{evaluate_team, EvalStats, Team};
use crate::exec::Exec;
use crate::io::checkpoint::{save_checkpoint, AgentState, Checkpoint};
use crate::io::config::RunConfig;
use crate::io::csv::write_eval_stats;
use crate::io::metrics::MetricsWriter;
use crate::io::prepare_output_dir;
use crate::nn::{backward_into, clip_global_norm, Adam, AdamConfig, ForwardTrace, Gradients};
use crate::policy::{NetController, Still};
use crate::rng::{stream, Domain};
use crate::rollout::{run_episode, EpisodeRecord};

pub const CHECKPOINT_FILE: &str = "checkpoint.fmrl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const EVAL_STATS_FILE: &str = "eval_stats.csv";

/// Hyperparameters of one training run. Defaults reproduce the full-size
/// experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub batch_episodes: usize,
    pub total_updates: u64,
    pub seed: u64,
    /// Train the prime alone, without a helper.
    pub baseline: bool,
    pub clip_norm: Option<f64>,
    pub learning_rate: f64,
    /// Greedy evaluation interval in updates; 0 disables it.
    pub eval_every: u64,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 200,
            gamma: 0.95,
            epsilon: 0.05,
            batch_episodes: 100,
            total_updates: 10_000,
            seed: 0,
            baseline: false,
            clip_norm: Some(10.0),
            learning_rate: 1e-3,
            eval_every: 100,
            eval_episodes: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden_size == 0 {
            return Err("hidden_size must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.batch_episodes == 0 || self.total_updates == 0 {
            return Err("batch_episodes and total_updates must be positive".into());
        }
        if self.clip_norm.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return Err("clip_norm must be positive".into());
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err("learning_rate must be positive".into());
        }
        if self.eval_every > 0 && self.eval_episodes == 0 {
            return Err("eval_episodes must be positive when eval_every is set".into());
        }
        Ok(())
    }

    pub fn lineup(&self) -> Lineup {
        if self.baseline {
            Lineup::PrimeAlone
        } else {
            Lineup::Joint
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// One rolled-out training episode with the forward passes needed for
/// backpropagation.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub record: EpisodeRecord,
    pub prime: ForwardTrace<f32>,
    pub helper: Option<ForwardTrace<f32>>,
}

/// Batch statistics of one update. Sums are exact; `mean_*` divide by the
/// episode count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMetrics {
    pub update: u64,
    pub episodes: usize,
    pub reward_tenths: i64,
    pub prime_collect_tenths: i64,
    pub helper_collect_tenths: i64,
    pub prime_moves: u64,
    pub helper_moves: u64,
    pub prime_loss: f64,
    pub helper_loss: Option<f64>,
    pub prime_grad_norm: f64,
    pub helper_grad_norm: Option<f64>,
    pub eval_reward: Option<f64>,
}

impl TrainMetrics {
    fn per_episode(&self, v: f64) -> f64 {
        v / self.episodes as f64
    }

    pub fn mean_reward(&self) -> f64 {
        self.per_episode(self.reward_tenths as f64 / 10.0)
    }

    pub fn mean_prime_collect(&self) -> f64 {
        self.per_episode(self.prime_collect_tenths as f64 / 10.0)
    }

    pub fn mean_helper_collect(&self) -> f64 {
        self.per_episode(self.helper_collect_tenths as f64 / 10.0)
    }

    pub fn mean_prime_moves(&self) -> f64 {
        self.per_episode(self.prime_moves as f64)
    }

    pub fn mean_helper_moves(&self) -> f64 {
        self.per_episode(self.helper_moves as f64)
    }

    /// `prime_collect + helper_collect − 0.1·prime_moves == reward`, in tenths.
    pub fn attribution_holds(&self) -> bool {
        self.prime_collect_tenths + self.helper_collect_tenths - self.prime_moves as i64
            == self.reward_tenths
    }
}

/// Parameters plus optimizer state of one agent.
pub type Learner = AgentState;

pub struct Trainer {
    config: TrainConfig,
    prime: Learner,
    helper: Option<Learner>,
    updates_done: u64,
    exec: Exec,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, TrainError> {
        config
            .validate()
            .map_err(|m| TrainError::Config(crate::ConfigError::Invalid(m)))?;
        let learner = |role: Role, index: u64| {
            let mut rng = stream(config.seed, Domain::Init, index);
            let policy = PolicyNet::init(&mut rng, role, config.hidden_size);
            let adam = Adam::new(config.adam(), &policy.net);
            AgentState { policy, adam }
        };
        let prime = learner(Role::Prime, 0);
        let helper = (!config.baseline).then(|| learner(Role::Helper, 1));
        Ok(Self {
            config,
            prime,
            helper,
            updates_done: 0,
            exec: Exec::default(),
        })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, TrainError> {
        ck.config
            .validate()
            .map_err(|m| TrainError::Config(crate::ConfigError::Invalid(m)))?;
        if ck.config.baseline != ck.helper.is_none() {
            return Err(TrainError::Checkpoint(crate::CheckpointError::Corrupt(
                "helper section does not match the baseline flag".into(),
            )));
        }
        Ok(Self {
            config: ck.config,
            prime: ck.prime,
            helper: ck.helper,
            updates_done: ck.updates_done,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn prime(&self) -> &PolicyNet {
        &self.prime.policy
    }

    pub fn helper(&self) -> Option<&PolicyNet> {
        self.helper.as_ref().map(|l| &l.policy)
    }

    pub fn team(&self) -> Team<'_> {
        Team {
            prime: self.prime(),
            helper: self.helper(),
        }
    }

    pub fn updates_done(&self) -> u64 {
        self.updates_done
    }

    pub fn is_finished(&self) -> bool {
        self.updates_done >= self.config.total_updates
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            updates_done: self.updates_done,
            prime: self.prime.clone(),
            helper: self.helper.clone(),
        }
    }

    /// Per-episode random stream: the task, the script and all exploration
    /// draws of episode `i` of update `u` come from stream `u·batch + i`.
    fn episode_rng(&self, update: u64, episode: usize) -> crate::rng::EpisodeRng {
        let index = update * self.config.batch_episodes as u64 + episode as u64;
        stream(self.config.seed, Domain::Train, index)
    }

    /// Rolls out the training batch for the next update.
    pub fn collect_batch(&self) -> Result<Vec<EpisodeTrace>, TrainError> {
        let update = self.updates_done;
        let mode = SelectionMode::EpsilonGreedy(self.config.epsilon);
        let lineup = self.config.lineup();
        self.exec.try_map(self.config.batch_episodes, |i| {
            let mut rng = self.episode_rng(update, i);
            let task = TaskSpec::sample(&mut rng);
            let script = SpawnScript::sample(&mut rng);
            let mut prime = NetController::new(&self.prime.policy, mode).recording();
            match &self.helper {
                Some(h) => {
                    let mut helper = NetController::new(&h.policy, mode).recording();
                    let record = run_episode(task, script, lineup, &mut prime, &mut helper, &mut rng)?;
                    Ok(EpisodeTrace {
                        record,
                        prime: prime.take_trace(),
                        helper: Some(helper.take_trace()),
                    })
                }
                None => {
                    let record = run_episode(task, script, lineup, &mut prime, &mut Still, &mut rng)?;
                    Ok(EpisodeTrace {
                        record,
                        prime: prime.take_trace(),
                        helper: None,
                    })
                }
            }
        })
    }

    /// Summed loss and gradient over a batch for one role, reduced in
    /// episode order.
    pub fn batch_gradients(
        &self,
        role: Role,
        batch: &[EpisodeTrace],
    ) -> Result<(f64, Gradients<f32>), NnError> {
        let learner = match role {
            Role::Prime => &self.prime,
            Role::Helper => self
                .helper
                .as_ref()
                .ok_or_else(|| NnError::shape("batch_gradients", "helper", "baseline run"))?,
        };
        batch_gradients(&learner.policy, role, batch, self.config.gamma, self.exec)
    }

    /// One Adam step per agent on the batch loss.
    pub fn train_step(&mut self, batch: &[EpisodeTrace]) -> Result<TrainMetrics, TrainError> {
        let update = self.updates_done;
        let non_finite = |agent: &'static str, e: NnError| match e {
            NnError::NonFinite(what) => TrainError::NonFinite { update, agent, what },
            other => TrainError::Nn(other),
        };

        let (prime_loss, mut prime_grads) = self
            .batch_gradients(Role::Prime, batch)
            .map_err(|e| non_finite("prime", e))?;
        let helper = match self.helper.is_some() {
            true => Some(
                self.batch_gradients(Role::Helper, batch)
                    .map_err(|e| non_finite("helper", e))?,
            ),
            false => None,
        };

        let clip = |g: &mut Gradients<f32>| match self.config.clip_norm {
            Some(max) => clip_global_norm(g, max),
            None => g.norm(),
        };
        let prime_grad_norm = clip(&mut prime_grads);
        let mut helper_stats = None;
        let mut helper_grads = None;
        if let Some((loss, mut g)) = helper {
            helper_stats = Some((loss, clip(&mut g)));
            helper_grads = Some(g);
        }

        self.prime.adam.step(&mut self.prime.policy.net, &prime_grads)?;
        if let (Some(h), Some(g)) = (self.helper.as_mut(), helper_grads.as_ref()) {
            h.adam.step(&mut h.policy.net, g)?;
        }
        self.updates_done += 1;

        let mut m = TrainMetrics {
            update,
            episodes: batch.len(),
            reward_tenths: 0,
            prime_collect_tenths: 0,
            helper_collect_tenths: 0,
            prime_moves: 0,
            helper_moves: 0,
            prime_loss,
            helper_loss: helper_stats.map(|s| s.0),
            prime_grad_norm,
            helper_grad_norm: helper_stats.map(|s| s.1),
            eval_reward: None,
        };
        for tr in batch {
            let s = tr.record.summary();
            m.reward_tenths += i64::from(s.total.tenths());
            m.prime_collect_tenths += i64::from(s.prime_collect.tenths());
            m.helper_collect_tenths += i64::from(s.helper_collect.tenths());
            m.prime_moves += s.prime_moves as u64;
            m.helper_moves += s.helper_moves as u64;
        }
        Ok(m)
    }

    /// Collects a batch and trains on it.
    pub fn step(&mut self) -> Result<TrainMetrics, TrainError> {
        let update = self.updates_done;
        let batch = self.collect_batch().map_err(|e| match e {
            TrainError::Nn(NnError::NonFinite(what)) => TrainError::NonFinite {
                update,
                agent: "rollout",
                what,
            },
            other => other,
        })?;
        self.train_step(&batch)
    }

    /// Greedy evaluation on a fixed set of held-out episodes.
    pub fn evaluate(&self, episodes: usize) -> Result<EvalStats, TrainError> {
        evaluate_team(self.team(), episodes, self.config.seed, self.exec)
    }
}

pub fn batch_gradients(
    policy: &PolicyNet,
    role: Role,
    batch: &[EpisodeTrace],
    gamma: f64,
    exec: Exec,
) -> Result<(f64, Gradients<f32>), NnError> {
    let per_episode = exec.try_map(batch.len(), |i| {
        let tr = &batch[i];
        let (fwd, actions) = match role {
            Role::Prime => (&tr.prime, &tr.record.prime_actions),
            Role::Helper => (
                tr.helper
                    .as_ref()
                    .ok_or_else(|| NnError::shape("batch_gradients", "helper trace", "none"))?,
                &tr.record.helper_actions,
            ),
        };
        let mut g = policy.net.zeros_like();
        let loss = backward_into(&policy.net, fwd, actions, &tr.record.rewards_f32(), gamma as f32, &mut g)?;
        Ok((loss, g))
    })?;
    let mut total = policy.net.zeros_like();
    let mut loss = 0.0;
    for (l, g) in &per_episode {
        loss += f64::from(*l);
        total.add_assign(g)?;
    }
    Ok((loss, total))
}

/// Options for [`train`].
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub force: bool,
    pub resume: Option<Checkpoint>,
}

/// Result of a finished [`train`] run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    pub final_eval: EvalStats,
}

/// Full training run writing `config.txt`, `metrics.csv`, the checkpoint and
/// a final `eval_stats.csv` under `out`. A non-finite loss aborts the run and
/// leaves the last periodic checkpoint in place.
///
/// When resuming, `out` may hold the earlier run; its metrics rows up to the
/// checkpoint are kept and the checkpoint's own config wins over `run.train`.
pub fn train(
    run: &RunConfig,
    out: &Path,
    opts: TrainOptions,
    mut on_update: impl FnMut(&TrainMetrics),
) -> Result<TrainReport, TrainError> {
    let resuming = opts.resume.is_some();
    let mut trainer = match opts.resume {
        Some(ck) => Trainer::from_checkpoint(ck)?,
        None => Trainer::new(run.train.clone())?,
    };
    let metrics_path = out.join(METRICS_FILE);
    let mut metrics = if resuming {
        fs::create_dir_all(out)?;
        MetricsWriter::resume(&metrics_path, trainer.updates_done())?
    } else {
        prepare_output_dir(out, opts.force)?;
        MetricsWriter::create(&metrics_path)?
    };
    fs::write(out.join(CONFIG_FILE), run.render())?;
    let ck_path = out.join(CHECKPOINT_FILE);

    while !trainer.is_finished() {
        let mut m = trainer.step()?;
        let done = trainer.updates_done();
        let every = trainer.config().eval_every;
        if every > 0 && done % every == 0 {
            m.eval_reward = Some(trainer.evaluate(trainer.config().eval_episodes)?.reward.mean);
        }
        metrics.write(&m)?;
        on_update(&m);
        if run.checkpoint_every > 0 && done % run.checkpoint_every == 0 {
            metrics.flush()?;
            save_checkpoint(&ck_path, &trainer.checkpoint())?;
        }
    }
    metrics.flush()?;
    let checkpoint = trainer.checkpoint();
    save_checkpoint(&ck_path, &checkpoint)?;
    let final_eval = trainer.evaluate(run.final_eval_episodes)?;
    write_eval_stats(&out.join(EVAL_STATS_FILE), &final_eval)?;
    Ok(TrainReport {
        checkpoint,
        final_eval,
    })
}
