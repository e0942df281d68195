//! One human-as-prime episode, independent of any transport.

use std::str::FromStr;
use std::sync::Arc;

use forage::agent::{PolicyNet, SelectionMode};
use forage::env::{
    Action, Env, Lineup, Observation, Reward, Role, SpawnScript, TaskSpec, EPISODE_STEPS, GRID_CELLS,
    OBJECTS_PER_EPISODE, OBJECT_LIFETIME,
};
use forage::io::checkpoint::Checkpoint;
use forage::nn::{LstmState, StepCache};
use forage::policy::{NetController, Replay};
use forage::rng::{stream, Domain, EpisodeRng};
use forage::rollout::{run_episode, EpisodeRecord};
use forage::{NnError, TrainError};

use crate::wire::{CellState, ClientMessage, EpisodeTotals, Rules, ServerMessage};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("checkpoint has no helper parameters (baseline run)")]
    NoHelper,
    #[error("helper network failed: {0}")]
    Model(#[from] NnError),
}

/// Task, script and random stream of session `id` under `seed`.
pub fn session_episode(seed: u64, id: u64) -> (TaskSpec, SpawnScript, EpisodeRng) {
    let mut rng = stream(seed, Domain::Session, id);
    let task = TaskSpec::sample(&mut rng);
    let script = SpawnScript::sample(&mut rng);
    (task, script, rng)
}

/// Everything needed to replay a session offline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub seed: u64,
    pub session_id: u64,
    pub prime_actions: Vec<Action>,
}

/// Re-runs a transcript with the helper acting greedily, as offline
/// evaluation would.
pub fn replay(helper: &PolicyNet, transcript: &Transcript) -> Result<EpisodeRecord, TrainError> {
    let (task, script, mut rng) = session_episode(transcript.seed, transcript.session_id);
    let mut prime = Replay::new(transcript.prime_actions.clone());
    let mut helper = NetController::greedy(helper);
    run_episode(task, script, Lineup::Joint, &mut prime, &mut helper, &mut rng)
}

pub struct Session {
    id: u64,
    seed: u64,
    helper: Arc<PolicyNet>,
    helper_state: LstmState<f32>,
    scratch: StepCache<f32>,
    env: Env,
    rng: EpisodeRng,
    prime_obs: Observation,
    helper_obs: Observation,
    rewards: Vec<Reward>,
    prime_actions: Vec<Action>,
    helper_actions: Vec<Action>,
    prime_collect: Reward,
    helper_collect: Reward,
    deadline_ms: Option<u64>,
}

impl Session {
    /// Starts a fresh episode and returns its opening `hello` and `state`
    /// followed by the first `your_turn`.
    pub fn start(helper: Arc<PolicyNet>, seed: u64, id: u64) -> Result<(Self, Vec<ServerMessage>), SessionError> {
        if helper.role != Role::Helper {
            return Err(SessionError::Model(NnError::Shape {
                op: "session helper",
                expected: Role::Helper.as_str().into(),
                got: helper.role.as_str().into(),
            }));
        }
        let (task, script, rng) = session_episode(seed, id);
        let (env, prime_obs, helper_obs) = Env::reset(task, script);
        let helper_state = helper.reset_state();
        let session = Self {
            id,
            seed,
            helper,
            helper_state,
            scratch: StepCache::default(),
            env,
            rng,
            prime_obs,
            helper_obs,
            rewards: Vec::new(),
            prime_actions: Vec::new(),
            helper_actions: Vec::new(),
            prime_collect: Reward::ZERO,
            helper_collect: Reward::ZERO,
            deadline_ms: None,
        };
        let messages = session.opening();
        Ok((session, messages))
    }

    /// `hello`, the initial `state` and the first `your_turn`.
    pub fn opening(&self) -> Vec<ServerMessage> {
        vec![self.hello(), self.state(Reward::ZERO, None, None, false), self.your_turn()]
    }

    pub fn from_checkpoint(ck: &Checkpoint, seed: u64, id: u64) -> Result<(Self, Vec<ServerMessage>), SessionError> {
        let helper = ck.helper.as_ref().ok_or(SessionError::NoHelper)?;
        Self::start(Arc::new(helper.policy.clone()), seed, id)
    }

    /// Announces an auto-`stay` deadline in every `your_turn`.
    pub fn with_deadline(mut self, deadline_ms: Option<u64>) -> Self {
        self.deadline_ms = deadline_ms.filter(|&ms| ms > 0);
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn task(&self) -> TaskSpec {
        self.env.task()
    }

    pub fn script(&self) -> &SpawnScript {
        self.env.script()
    }

    pub fn is_finished(&self) -> bool {
        self.env.is_done()
    }

    pub fn cumulative_reward(&self) -> Reward {
        self.rewards.iter().copied().sum()
    }

    pub fn rewards(&self) -> &[Reward] {
        &self.rewards
    }

    pub fn helper_actions(&self) -> &[Action] {
        &self.helper_actions
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            seed: self.seed,
            session_id: self.id,
            prime_actions: self.prime_actions.clone(),
        }
    }

    /// Handles one line from the client. Malformed messages and invalid
    /// actions produce a single `error` and leave the episode unchanged.
    pub fn handle_line(&mut self, line: &str) -> Vec<ServerMessage> {
        match ClientMessage::parse(line) {
            Ok(ClientMessage::Action { action }) => match Action::from_str(&action) {
                Ok(a) => self.handle_action(a, false),
                Err(_) => vec![error(format!("invalid action {action:?}; expected left, right or stay"))],
            },
            Err(e) => vec![error(e)],
        }
    }

    /// Steps the episode with the human's action and the helper's greedy
    /// action. Answers with `state` + `your_turn`, or `episode_end` after
    /// the last step.
    pub fn handle_action(&mut self, action: Action, auto_stay: bool) -> Vec<ServerMessage> {
        if self.is_finished() {
            return vec![error("episode has ended".into())];
        }
        let helper_action = match self.helper.act(
            &mut self.helper_state,
            &self.helper_obs,
            SelectionMode::Greedy,
            &mut self.rng,
            &mut self.scratch,
        ) {
            Ok((a, _)) => a,
            Err(e) => return vec![error(format!("helper network failed: {e}"))],
        };
        let out = match self.env.step(action, helper_action) {
            Ok(out) => out,
            Err(e) => return vec![error(e.to_string())],
        };
        for c in &out.collections {
            match c.collector {
                Role::Prime => self.prime_collect += c.reward(),
                Role::Helper => self.helper_collect += c.reward(),
            }
        }
        self.rewards.push(out.reward);
        self.prime_actions.push(action);
        self.helper_actions.push(helper_action);
        self.prime_obs = out.prime_obs;
        self.helper_obs = out.helper_obs;
        if out.done {
            vec![self.episode_end()]
        } else {
            vec![self.state(out.reward, Some(action), Some(helper_action), auto_stay), self.your_turn()]
        }
    }

    fn hello(&self) -> ServerMessage {
        let task = self.env.task();
        ServerMessage::Hello {
            session_id: self.id,
            seed: self.seed,
            grid_cells: GRID_CELLS,
            episode_steps: EPISODE_STEPS,
            good_class: task.good_class.as_str().into(),
            bad_class: task.bad_class().as_str().into(),
            rules: Rules {
                good_reward: Reward::GOOD.as_f64(),
                bad_reward: Reward::BAD.as_f64(),
                prime_move_penalty: Reward::PRIME_MOVE.as_f64(),
                object_lifetime: OBJECT_LIFETIME,
                objects_per_episode: OBJECTS_PER_EPISODE,
            },
        }
    }

    /// Rendered from the prime's observation, goodness bits included.
    fn state(&self, reward: Reward, prime: Option<Action>, helper: Option<Action>, auto_stay: bool) -> ServerMessage {
        let cells = self
            .prime_obs
            .cells()
            .iter()
            .map(|v| CellState {
                prime: v.prime,
                helper: v.helper,
                object: v.object.map(|k| k.as_str().to_string()),
                good: v.object.and(v.good),
            })
            .collect();
        ServerMessage::State {
            t: self.env.t(),
            cells,
            prime_pos: self.env.prime_pos(),
            helper_pos: self.env.helper_pos().unwrap_or_default(),
            reward: reward.as_f64(),
            cumulative_reward: self.cumulative_reward().as_f64(),
            prime_action: prime.map(|a| a.as_str().into()),
            helper_action: helper.map(|a| a.as_str().into()),
            auto_stay,
        }
    }

    fn your_turn(&self) -> ServerMessage {
        ServerMessage::YourTurn {
            t: self.env.t(),
            deadline_ms: self.deadline_ms,
        }
    }

    fn episode_end(&self) -> ServerMessage {
        ServerMessage::EpisodeEnd {
            t: self.env.t(),
            totals: EpisodeTotals {
                total_reward: self.cumulative_reward().as_f64(),
                prime_collect_reward: self.prime_collect.as_f64(),
                helper_collect_reward: self.helper_collect.as_f64(),
                prime_moves: self.prime_actions.iter().filter(|a| a.is_move()).count(),
                helper_moves: self.helper_actions.iter().filter(|a| a.is_move()).count(),
            },
            rewards: self.rewards.iter().map(|r| r.as_f64()).collect(),
            prime_actions: self.prime_actions.iter().map(|a| a.as_str().to_string()).collect(),
        }
    }
}

fn error(message: String) -> ServerMessage {
    ServerMessage::Error { message }
}
