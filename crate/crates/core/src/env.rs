//! The five-cell, two-agent foraging gridworld.
//!
//! Objects of two classes appear alternately at the two end cells, live for
//! [`OBJECT_LIFETIME`] steps and are collected by any agent standing on their
//! cell. Only the prime's observation carries the per-episode goodness bit.
//!
//! A step resolves in a fixed order: both agents move, objects expire,
//! scripted objects spawn, then co-located objects are collected.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rand::Rng;

use crate::error::EnvError;

pub const GRID_CELLS: usize = 5;
pub const LEFT_CELL: usize = 0;
pub const RIGHT_CELL: usize = GRID_CELLS - 1;
pub const EPISODE_STEPS: usize = 100;
pub const OBJECTS_PER_EPISODE: usize = 20;
pub const OBJECT_LIFETIME: usize = 9;
pub const SPAWN_PERIOD: usize = EPISODE_STEPS / OBJECTS_PER_EPISODE;
pub const PRIME_START: usize = 1;
pub const HELPER_START: usize = 3;
pub const HELPER_CELL_BITS: usize = 5;
pub const PRIME_CELL_BITS: usize = 6;
pub const HELPER_OBS_LEN: usize = GRID_CELLS * HELPER_CELL_BITS;
pub const PRIME_OBS_LEN: usize = GRID_CELLS * PRIME_CELL_BITS;

/// Reward in integer tenths, so accounting identities hold exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reward(pub i32);

impl Reward {
    pub const ZERO: Reward = Reward(0);
    pub const GOOD: Reward = Reward(10);
    pub const BAD: Reward = Reward(-10);
    pub const PRIME_MOVE: Reward = Reward(-1);

    pub fn tenths(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn as_f32(self) -> f32 {
        self.0 as f32 / 10.0
    }
}

impl Add for Reward {
    type Output = Reward;
    fn add(self, rhs: Reward) -> Reward {
        Reward(self.0 + rhs.0)
    }
}

impl AddAssign for Reward {
    fn add_assign(&mut self, rhs: Reward) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Reward {
    fn sum<I: Iterator<Item = Reward>>(iter: I) -> Reward {
        iter.fold(Reward::ZERO, Add::add)
    }
}

impl fmt::Display for Reward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectClass {
    A,
    B,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 2] = [ObjectClass::A, ObjectClass::B];

    pub fn other(self) -> ObjectClass {
        match self {
            ObjectClass::A => ObjectClass::B,
            ObjectClass::B => ObjectClass::A,
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> ObjectClass {
        if rng.random::<bool>() {
            ObjectClass::A
        } else {
            ObjectClass::B
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::A => "A",
            ObjectClass::B => "B",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ObjectClass::A),
            "B" | "b" => Ok(ObjectClass::B),
            other => Err(EnvError::Parse(format!("unknown object class {other:?}"))),
        }
    }
}

/// The hidden reward function of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskSpec {
    pub good_class: ObjectClass,
}

impl TaskSpec {
    pub fn new(good_class: ObjectClass) -> Self {
        Self { good_class }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(ObjectClass::sample(rng))
    }

    pub fn is_good(&self, class: ObjectClass) -> bool {
        class == self.good_class
    }

    pub fn bad_class(&self) -> ObjectClass {
        self.good_class.other()
    }

    pub fn flipped(&self) -> Self {
        Self::new(self.good_class.other())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Left, Action::Right, Action::Stay];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Right => 1,
            Action::Stay => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn is_move(self) -> bool {
        self != Action::Stay
    }

    /// Destination cell, clamped to the grid.
    pub fn apply(self, cell: usize) -> usize {
        match self {
            Action::Left => cell.saturating_sub(1),
            Action::Right => (cell + 1).min(RIGHT_CELL),
            Action::Stay => cell,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
        }
    }

    /// One step toward `target`, or `Stay` when already there.
    pub fn toward(from: usize, target: usize) -> Action {
        use std::cmp::Ordering::*;
        match target.cmp(&from) {
            Less => Action::Left,
            Greater => Action::Right,
            Equal => Action::Stay,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Action::Left),
            "right" => Ok(Action::Right),
            "stay" => Ok(Action::Stay),
            other => Err(EnvError::Parse(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Prime,
    Helper,
}

impl Role {
    pub fn obs_len(self) -> usize {
        match self {
            Role::Prime => PRIME_OBS_LEN,
            Role::Helper => HELPER_OBS_LEN,
        }
    }

    pub fn cell_bits(self) -> usize {
        match self {
            Role::Prime => PRIME_CELL_BITS,
            Role::Helper => HELPER_CELL_BITS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Prime => "prime",
            Role::Helper => "helper",
        }
    }
}

/// Who takes part in an episode. `PrimeAlone` is the no-helper baseline:
/// the helper never appears in observations and its actions are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lineup {
    Joint,
    PrimeAlone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpawnEntry {
    pub time: usize,
    pub cell: usize,
    pub class: ObjectClass,
}

/// The ordered spawn schedule of one episode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpawnScript {
    entries: Vec<SpawnEntry>,
}

impl SpawnScript {
    pub fn new(entries: Vec<SpawnEntry>) -> Result<Self, EnvError> {
        let invalid = |msg: String| Err(EnvError::InvalidScript(msg));
        if entries.len() != OBJECTS_PER_EPISODE {
            return invalid(format!(
                "expected {OBJECTS_PER_EPISODE} entries, got {}",
                entries.len()
            ));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.time >= EPISODE_STEPS {
                return invalid(format!("entry {i}: spawn time {} out of range", e.time));
            }
            if e.cell != LEFT_CELL && e.cell != RIGHT_CELL {
                return invalid(format!("entry {i}: cell {} is not an end cell", e.cell));
            }
            if i > 0 {
                let prev = &entries[i - 1];
                if e.time <= prev.time {
                    return invalid(format!("entry {i}: spawn times must strictly increase"));
                }
                if e.cell == prev.cell {
                    return invalid(format!("entry {i}: cells must alternate"));
                }
            }
            // same-cell neighbours must not overlap in lifetime
            if i > 1 && e.time < entries[i - 2].time + OBJECT_LIFETIME {
                return invalid(format!(
                    "entry {i}: spawns before the previous object on cell {} expires",
                    e.cell
                ));
            }
        }
        Ok(Self { entries })
    }

    /// Spawn `i` at `SPAWN_PERIOD * i`, sides alternating from `first_cell`.
    pub fn periodic(first_cell: usize, classes: &[ObjectClass]) -> Result<Self, EnvError> {
        let other = if first_cell == LEFT_CELL {
            RIGHT_CELL
        } else {
            LEFT_CELL
        };
        let entries = classes
            .iter()
            .enumerate()
            .map(|(i, &class)| SpawnEntry {
                time: SPAWN_PERIOD * i,
                cell: if i % 2 == 0 { first_cell } else { other },
                class,
            })
            .collect();
        Self::new(entries)
    }

    /// Random first side, i.i.d. uniform classes.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let first = if rng.random::<bool>() {
            RIGHT_CELL
        } else {
            LEFT_CELL
        };
        let classes: Vec<ObjectClass> = (0..OBJECTS_PER_EPISODE)
            .map(|_| ObjectClass::sample(rng))
            .collect();
        Self::periodic(first, &classes).expect("periodic script is valid")
    }

    pub fn entries(&self) -> &[SpawnEntry] {
        &self.entries
    }

    pub fn first_cell(&self) -> usize {
        self.entries[0].cell
    }

    pub fn count_class(&self, class: ObjectClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    /// Line-based `t,cell,class` text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.time, e.cell, e.class));
        }
        out
    }

    /// Parses the `t,cell,class` format. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || EnvError::Parse(format!("line {}: expected t,cell,class", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let time = fields[0].parse().map_err(|_| bad())?;
            let cell = fields[1].parse().map_err(|_| bad())?;
            let class = fields[2].parse()?;
            entries.push(SpawnEntry { time, cell, class });
        }
        Self::new(entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridObject {
    /// Index of the object's entry in the spawn script.
    pub id: usize,
    pub cell: usize,
    pub class: ObjectClass,
    pub spawn_time: usize,
    pub expiry_time: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Collection {
    pub object: usize,
    pub class: ObjectClass,
    pub good: bool,
    /// The prime is credited when both agents stand on the object.
    pub collector: Role,
}

impl Collection {
    pub fn reward(&self) -> Reward {
        if self.good {
            Reward::GOOD
        } else {
            Reward::BAD
        }
    }
}

/// Per-role flat bit vector, cells serialized left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    role: Role,
    bits: Vec<u8>,
}

/// What an observation says about one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellView {
    pub prime: bool,
    pub helper: bool,
    pub object: Option<ObjectClass>,
    /// Goodness bit; only prime observations carry it.
    pub good: Option<bool>,
}

impl Observation {
    pub fn from_bits(role: Role, bits: Vec<u8>) -> Result<Self, EnvError> {
        if bits.len() != role.obs_len() || bits.iter().any(|&b| b > 1) {
            return Err(EnvError::Parse(format!(
                "{} observation needs {} binary entries",
                role.as_str(),
                role.obs_len()
            )));
        }
        Ok(Self { role, bits })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn cell_bits(&self, cell: usize) -> &[u8] {
        let w = self.role.cell_bits();
        &self.bits[cell * w..(cell + 1) * w]
    }

    pub fn write_input<T: From<u8>>(&self, out: &mut Vec<T>) {
        out.clear();
        out.extend(self.bits.iter().map(|&b| T::from(b)));
    }

    pub fn cell(&self, cell: usize) -> CellView {
        let b = self.cell_bits(cell);
        let object = if b[2] == 1 {
            Some(if b[3] == 1 {
                ObjectClass::A
            } else {
                ObjectClass::B
            })
        } else {
            None
        };
        CellView {
            prime: b[0] == 1,
            helper: b[1] == 1,
            object,
            good: (self.role == Role::Prime).then(|| b[5] == 1),
        }
    }

    pub fn cells(&self) -> [CellView; GRID_CELLS] {
        std::array::from_fn(|c| self.cell(c))
    }

    pub fn prime_pos(&self) -> Option<usize> {
        (0..GRID_CELLS).find(|&c| self.cell_bits(c)[0] == 1)
    }

    pub fn helper_pos(&self) -> Option<usize> {
        (0..GRID_CELLS).find(|&c| self.cell_bits(c)[1] == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub prime_obs: Observation,
    pub helper_obs: Observation,
    pub reward: Reward,
    pub done: bool,
    pub collections: Vec<Collection>,
    /// Objects removed without being collected, including those still live
    /// when the episode ends.
    pub expired: Vec<usize>,
    pub prime_moved: bool,
    pub helper_moved: bool,
}

/// One running episode.
#[derive(Debug, Clone)]
pub struct Env {
    task: TaskSpec,
    script: SpawnScript,
    lineup: Lineup,
    t: usize,
    prime_pos: usize,
    helper_pos: usize,
    live: [Option<GridObject>; GRID_CELLS],
    next_spawn: usize,
    pending: Vec<Collection>,
}

impl Env {
    pub fn reset(task: TaskSpec, script: SpawnScript) -> (Env, Observation, Observation) {
        Self::reset_with(task, script, Lineup::Joint)
    }

    pub fn reset_with(
        task: TaskSpec,
        script: SpawnScript,
        lineup: Lineup,
    ) -> (Env, Observation, Observation) {
        let mut env = Env {
            task,
            script,
            lineup,
            t: 0,
            prime_pos: PRIME_START,
            helper_pos: HELPER_START,
            live: [None; GRID_CELLS],
            next_spawn: 0,
            pending: Vec::new(),
        };
        env.spawn_due();
        env.pending = env.collect();
        let prime_obs = env.observe(Role::Prime);
        let helper_obs = env.observe(Role::Helper);
        (env, prime_obs, helper_obs)
    }

    pub fn task(&self) -> TaskSpec {
        self.task
    }

    pub fn script(&self) -> &SpawnScript {
        &self.script
    }

    pub fn lineup(&self) -> Lineup {
        self.lineup
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= EPISODE_STEPS
    }

    pub fn prime_pos(&self) -> usize {
        self.prime_pos
    }

    /// `None` when the helper is not part of the episode.
    pub fn helper_pos(&self) -> Option<usize> {
        match self.lineup {
            Lineup::Joint => Some(self.helper_pos),
            Lineup::PrimeAlone => None,
        }
    }

    pub fn live_objects(&self) -> impl Iterator<Item = &GridObject> {
        self.live.iter().flatten()
    }

    pub fn object_at(&self, cell: usize) -> Option<&GridObject> {
        self.live.get(cell).and_then(Option::as_ref)
    }

    /// Advances one step. In `PrimeAlone` episodes `helper_action` is ignored.
    pub fn step(&mut self, prime_action: Action, helper_action: Action) -> Result<StepOutcome, EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeDone);
        }
        let helper_action = match self.lineup {
            Lineup::Joint => helper_action,
            Lineup::PrimeAlone => Action::Stay,
        };
        self.t += 1;
        self.prime_pos = prime_action.apply(self.prime_pos);
        self.helper_pos = helper_action.apply(self.helper_pos);

        let mut expired = Vec::new();
        for slot in self.live.iter_mut() {
            if slot.is_some_and(|o| o.expiry_time == self.t) {
                expired.push(slot.take().map(|o| o.id).unwrap_or_default());
            }
        }
        self.spawn_due();

        let mut collections = std::mem::take(&mut self.pending);
        collections.extend(self.collect());

        let mut reward: Reward = collections.iter().map(Collection::reward).sum();
        if prime_action.is_move() {
            reward += Reward::PRIME_MOVE;
        }

        // The final observation still shows objects that outlive the episode;
        // they are reported as expired and cleared afterwards.
        let prime_obs = self.observe(Role::Prime);
        let helper_obs = self.observe(Role::Helper);
        let done = self.is_done();
        if done {
            for slot in self.live.iter_mut() {
                if let Some(o) = slot.take() {
                    expired.push(o.id);
                }
            }
        }

        Ok(StepOutcome {
            prime_obs,
            helper_obs,
            reward,
            done,
            collections,
            expired,
            prime_moved: prime_action.is_move(),
            helper_moved: helper_action.is_move(),
        })
    }

    pub fn observe(&self, role: Role) -> Observation {
        let w = role.cell_bits();
        let mut bits = vec![0u8; GRID_CELLS * w];
        let helper = self.helper_pos();
        for cell in 0..GRID_CELLS {
            let b = &mut bits[cell * w..(cell + 1) * w];
            b[0] = u8::from(self.prime_pos == cell);
            b[1] = u8::from(helper == Some(cell));
            if let Some(obj) = &self.live[cell] {
                b[2] = 1;
                b[3] = u8::from(obj.class == ObjectClass::A);
                b[4] = u8::from(obj.class == ObjectClass::B);
                if role == Role::Prime {
                    b[5] = u8::from(self.task.is_good(obj.class));
                }
            }
        }
        Observation { role, bits }
    }

    fn spawn_due(&mut self) {
        while let Some(entry) = self.script.entries.get(self.next_spawn) {
            if entry.time != self.t {
                break;
            }
            debug_assert!(self.live[entry.cell].is_none());
            self.live[entry.cell] = Some(GridObject {
                id: self.next_spawn,
                cell: entry.cell,
                class: entry.class,
                spawn_time: entry.time,
                expiry_time: entry.time + OBJECT_LIFETIME,
            });
            self.next_spawn += 1;
        }
    }

    fn collect(&mut self) -> Vec<Collection> {
        let helper = self.helper_pos();
        let mut out = Vec::new();
        for cell in 0..GRID_CELLS {
            let collector = if self.prime_pos == cell {
                Role::Prime
            } else if helper == Some(cell) {
                Role::Helper
            } else {
                continue;
            };
            if let Some(obj) = self.live[cell].take() {
                out.push(Collection {
                    object: obj.id,
                    class: obj.class,
                    good: self.task.is_good(obj.class),
                    collector,
                });
            }
        }
        out
    }
}
