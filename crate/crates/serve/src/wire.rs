//! Wire messages. Each message is one JSON object with a `type` field,
//! sent as a single line.
//!
//! Server to client: `hello`, `state`, `your_turn`, `episode_end`, `error`.
//! Client to server: `action` with `"action": "left" | "right" | "stay"`.

use serde::{Deserialize, Serialize};

/// Reward rules announced in `hello`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rules {
    pub good_reward: f64,
    pub bad_reward: f64,
    pub prime_move_penalty: f64,
    pub object_lifetime: usize,
    pub objects_per_episode: usize,
}

/// One grid cell as the human prime sees it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellState {
    pub prime: bool,
    pub helper: bool,
    /// `"A"` or `"B"` when an object is present.
    pub object: Option<String>,
    /// Whether the object here is good; absent without an object.
    pub good: Option<bool>,
}

/// Totals matching the evaluation statistics of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTotals {
    pub total_reward: f64,
    pub prime_collect_reward: f64,
    pub helper_collect_reward: f64,
    pub prime_moves: usize,
    pub helper_moves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        session_id: u64,
        seed: u64,
        grid_cells: usize,
        episode_steps: usize,
        good_class: String,
        bad_class: String,
        rules: Rules,
    },
    State {
        t: usize,
        cells: Vec<CellState>,
        prime_pos: usize,
        helper_pos: usize,
        /// Reward of the step just taken; 0 in the initial state.
        reward: f64,
        cumulative_reward: f64,
        /// Actions of the step just taken.
        prime_action: Option<String>,
        helper_action: Option<String>,
        /// The prime action was an automatic `stay` after a timeout.
        auto_stay: bool,
    },
    YourTurn {
        t: usize,
        deadline_ms: Option<u64>,
    },
    EpisodeEnd {
        t: usize,
        totals: EpisodeTotals,
        /// Per-step rewards, for offline replay checks.
        rewards: Vec<f64>,
        prime_actions: Vec<String>,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Action { action: String },
}

impl ServerMessage {
    /// Serialized form without the trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    pub fn to_line(&self) -> String {
        let mut s = self.to_json();
        s.push('\n');
        s
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServerMessage::Hello { .. } => "hello",
            ServerMessage::State { .. } => "state",
            ServerMessage::YourTurn { .. } => "your_turn",
            ServerMessage::EpisodeEnd { .. } => "episode_end",
            ServerMessage::Error { .. } => "error",
        }
    }
}

impl ClientMessage {
    pub fn parse(line: &str) -> Result<Self, String> {
        serde_json::from_str(line.trim()).map_err(|e| format!("malformed message: {e}"))
    }

    pub fn action(action: &str) -> Self {
        ClientMessage::Action { action: action.to_string() }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wire messages always serialize");
        s.push('\n');
        s
    }
}
