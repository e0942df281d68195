//! Controllers drive one role through an episode. Learned networks and
//! hand-written scripted policies share the interface so the same rollout,
//! evaluation and probing code runs on both.

use rand::Rng;

use crate::agent::{PolicyNet, SelectionMode};
use crate::env::{Action, ObjectClass, Observation, Role, TaskSpec, GRID_CELLS, LEFT_CELL, OBJECT_LIFETIME, RIGHT_CELL};
use crate::error::NnError;
use crate::nn::{ForwardTrace, LstmState, Scalar, StepCache};
use crate::rng::EpisodeRng;

pub trait Controller {
    /// Called once before the first `act` of every episode. Only scripted
    /// oracles may look at `task`; learned controllers ignore it.
    fn begin_episode(&mut self, task: &TaskSpec);

    fn act(&mut self, obs: &Observation, rng: &mut EpisodeRng) -> Result<Action, NnError>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn begin_episode(&mut self, task: &TaskSpec) {
        (**self).begin_episode(task)
    }

    fn act(&mut self, obs: &Observation, rng: &mut EpisodeRng) -> Result<Action, NnError> {
        (**self).act(obs, rng)
    }
}

/// A [`PolicyNet`] with its per-episode recurrent state.
#[derive(Debug, Clone)]
pub struct NetController<'a, T: Scalar = f32> {
    policy: &'a PolicyNet<T>,
    state: LstmState<T>,
    mode: SelectionMode,
    record: bool,
    trace: ForwardTrace<T>,
    scratch: StepCache<T>,
}

impl<'a, T: Scalar> NetController<'a, T> {
    pub fn new(policy: &'a PolicyNet<T>, mode: SelectionMode) -> Self {
        Self {
            policy,
            state: policy.reset_state(),
            mode,
            record: false,
            trace: ForwardTrace::default(),
            scratch: StepCache::default(),
        }
    }

    pub fn greedy(policy: &'a PolicyNet<T>) -> Self {
        Self::new(policy, SelectionMode::Greedy)
    }

    /// Keeps forward intermediates for backpropagation.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn state(&self) -> &LstmState<T> {
        &self.state
    }

    pub fn trace(&self) -> &ForwardTrace<T> {
        &self.trace
    }

    pub fn take_trace(&mut self) -> ForwardTrace<T> {
        std::mem::take(&mut self.trace)
    }

    /// Last Q-vector, if any step has been taken with recording on.
    pub fn last_q(&self) -> Option<[T; Action::COUNT]> {
        self.trace.q.last().copied()
    }

    /// Acts and also returns the Q-vector of the step.
    pub fn act_with_q(
        &mut self,
        obs: &Observation,
        rng: &mut EpisodeRng,
    ) -> Result<(Action, [T; Action::COUNT]), NnError> {
        let mut cache = std::mem::take(&mut self.scratch);
        let (action, q) = self.policy.act(&mut self.state, obs, self.mode, rng, &mut cache)?;
        if self.record {
            self.trace.steps.push(cache);
            self.trace.q.push(q);
        } else {
            self.scratch = cache;
        }
        Ok((action, q))
    }
}

impl<T: Scalar> Controller for NetController<'_, T> {
    fn begin_episode(&mut self, _task: &TaskSpec) {
        self.state = self.policy.reset_state();
        self.trace = ForwardTrace::default();
    }

    fn act(&mut self, obs: &Observation, rng: &mut EpisodeRng) -> Result<Action, NnError> {
        self.act_with_q(obs, rng).map(|(a, _)| a)
    }
}

/// Never moves.
#[derive(Debug, Clone, Copy, Default)]
pub struct Still;

impl Controller for Still {
    fn begin_episode(&mut self, _task: &TaskSpec) {}

    fn act(&mut self, _obs: &Observation, _rng: &mut EpisodeRng) -> Result<Action, NnError> {
        Ok(Action::Stay)
    }
}

/// Uniformly random actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl Controller for UniformRandom {
    fn begin_episode(&mut self, _task: &TaskSpec) {}

    fn act(&mut self, _obs: &Observation, rng: &mut EpisodeRng) -> Result<Action, NnError> {
        Ok(Action::ALL[rng.random_range(0..Action::COUNT)])
    }
}

/// Replays a fixed action list, then stays.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    actions: Vec<Action>,
    next: usize,
}

impl Replay {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, next: 0 }
    }
}

impl Controller for Replay {
    fn begin_episode(&mut self, _task: &TaskSpec) {
        self.next = 0;
    }

    fn act(&mut self, _obs: &Observation, _rng: &mut EpisodeRng) -> Result<Action, NnError> {
        let a = self.actions.get(self.next).copied().unwrap_or(Action::Stay);
        self.next += 1;
        Ok(a)
    }
}

/// Remembers when each visible object was first seen, which is its spawn
/// step, so scripted policies can tell when it expires.
#[derive(Debug, Clone, Default)]
struct ObjectClock {
    t: usize,
    first_seen: [Option<usize>; GRID_CELLS],
}

impl ObjectClock {
    fn reset(&mut self) {
        *self = Self::default();
    }

    fn observe(&mut self, obs: &Observation) {
        for (cell, view) in obs.cells().iter().enumerate() {
            match (view.object, self.first_seen[cell]) {
                (Some(_), None) => self.first_seen[cell] = Some(self.t),
                (None, _) => self.first_seen[cell] = None,
                _ => {}
            }
        }
    }

    fn tick(&mut self) {
        self.t += 1;
    }

    /// Steps left in which an agent can still arrive and collect.
    fn remaining(&self, cell: usize) -> Option<usize> {
        self.first_seen[cell].map(|s| (s + OBJECT_LIFETIME).saturating_sub(self.t + 1))
    }
}

/// Steps off an edge cell so an object spawning there is not collected by
/// accident.
fn retreat(pos: usize) -> Action {
    match pos {
        LEFT_CELL => Action::Right,
        RIGHT_CELL => Action::Left,
        _ => Action::Stay,
    }
}

/// Picks the reachable wanted object expiring soonest and steps toward it,
/// otherwise leaves the edge.
fn forage_step(
    pos: usize,
    obs: &Observation,
    clock: &ObjectClock,
    wanted: impl Fn(usize) -> bool,
) -> Action {
    let target = (0..GRID_CELLS)
        .filter(|&c| obs.cell(c).object.is_some() && wanted(c))
        .filter_map(|c| {
            let left = clock.remaining(c)?;
            (pos.abs_diff(c) <= left).then_some((left, pos.abs_diff(c), c))
        })
        .min();
    match target {
        Some((_, _, cell)) => Action::toward(pos, cell),
        None => retreat(pos),
    }
}

/// Collects every reachable good object and avoids bad ones. Knows the task
/// directly, so it serves as an upper-bound helper.
#[derive(Debug, Clone)]
pub struct OracleForager {
    role: Role,
    task: Option<TaskSpec>,
    clock: ObjectClock,
}

impl OracleForager {
    pub fn new(role: Role) -> Self {
        Self {
            role,
            task: None,
            clock: ObjectClock::default(),
        }
    }
}

impl Controller for OracleForager {
    fn begin_episode(&mut self, task: &TaskSpec) {
        self.task = Some(*task);
        self.clock.reset();
    }

    fn act(&mut self, obs: &Observation, _rng: &mut EpisodeRng) -> Result<Action, NnError> {
        self.clock.observe(obs);
        let pos = match self.role {
            Role::Prime => obs.prime_pos(),
            Role::Helper => obs.helper_pos(),
        };
        let task = self.task.expect("begin_episode called");
        let action = match pos {
            Some(pos) => forage_step(pos, obs, &self.clock, |c| {
                obs.cell(c).object.is_some_and(|k| task.is_good(k))
            }),
            None => Action::Stay,
        };
        self.clock.tick();
        Ok(action)
    }
}

/// Prime policy of the learned communication protocol: collects the first
/// object if it is good, otherwise never moves. Uses only its observation.
/// After a collection it steps back off the edge.
#[derive(Debug, Clone, Default)]
pub struct SignallingPrime {
    clock: ObjectClock,
    first_cell: Option<usize>,
    done: bool,
}

impl Controller for SignallingPrime {
    fn begin_episode(&mut self, _task: &TaskSpec) {
        *self = Self::default();
    }

    fn act(&mut self, obs: &Observation, _rng: &mut EpisodeRng) -> Result<Action, NnError> {
        self.clock.observe(obs);
        if self.clock.t == 0 {
            self.first_cell = (0..GRID_CELLS).find(|&c| obs.cell(c).good == Some(true));
        }
        let pos = obs.prime_pos().unwrap_or_default();
        let action = match self.first_cell {
            Some(cell) if !self.done && obs.cell(cell).object.is_some() => Action::toward(pos, cell),
            _ => {
                self.done = true;
                retreat(pos)
            }
        };
        self.clock.tick();
        Ok(action)
    }
}

/// Helper counterpart of [`SignallingPrime`]: reads the prime's first step.
/// If the prime moved, the first object's class is good, otherwise the other
/// class is. Then forages every later object of that class.
#[derive(Debug, Clone, Default)]
pub struct InferringHelper {
    clock: ObjectClock,
    first: Option<(usize, ObjectClass)>,
    believed_good: Option<ObjectClass>,
    start_prime: Option<usize>,
}

impl Controller for InferringHelper {
    fn begin_episode(&mut self, _task: &TaskSpec) {
        *self = Self::default();
    }

    fn act(&mut self, obs: &Observation, _rng: &mut EpisodeRng) -> Result<Action, NnError> {
        self.clock.observe(obs);
        if self.clock.t == 0 {
            self.start_prime = obs.prime_pos();
            self.first = (0..GRID_CELLS).find_map(|c| obs.cell(c).object.map(|k| (c, k)));
        } else if self.clock.t == 1 {
            if let Some((_, class)) = self.first {
                let moved = obs.prime_pos() != self.start_prime;
                self.believed_good = Some(if moved { class } else { class.other() });
            }
        }
        let action = match (obs.helper_pos(), self.believed_good) {
            (Some(pos), Some(good)) => forage_step(pos, obs, &self.clock, |c| {
                let first_object = self.clock.first_seen[c] == Some(0);
                !first_object && obs.cell(c).object == Some(good)
            }),
            _ => Action::Stay,
        };
        self.clock.tick();
        Ok(action)
    }
}
