//! JSON messages exchanged over the live channel.
//!
//! Server to client: a [`Frame`] per simulation step, and one [`Reply`] per
//! command. Client to server: [`Command`] objects tagged by `"cmd"`. Unknown
//! fields are ignored in both directions.

use evalkit::Outcome;
use explain::AttributionFrame;
use harbor_env::{Action, Forces, Pose, RewardComponents, N_FEATURES};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The controller drives.
    Auto,
    /// The operator's last action is applied.
    Human,
}

/// Reward of the current step plus the running total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBlock {
    #[serde(flatten)]
    pub components: RewardComponents,
    pub total: f64,
    pub cumulative: f64,
}

/// Everything shown for one simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub v: u32,
    pub t: f64,
    pub step: u64,
    pub pose: Pose,
    pub state: [f64; N_FEATURES],
    /// What the controller asked for.
    pub action: Action,
    /// What the surrogate tree predicts.
    pub surrogate_action: Action,
    /// What was applied: `action` in auto mode, the held operator action otherwise.
    pub active_action: Action,
    /// Attributions from the surrogate's active leaf.
    pub attr: AttributionFrame,
    /// Total force and moment of the active action.
    pub forces: Forces,
    pub reward: RewardBlock,
    pub mode: Mode,
    /// Set on the last frame of the episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

/// Operator commands; applied at the next step boundary in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Command {
    Pause,
    Resume,
    Takeover,
    Release,
    SetAction { action: Action },
    SetSpeed { factor: f64 },
}

const COMMAND_NAMES: [&str; 6] = ["pause", "resume", "takeover", "release", "set_action", "set_speed"];

/// Error codes sent back to a client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not JSON, or not an object with a string `"cmd"`.
    Malformed,
    UnknownCommand,
    /// Known command with missing or invalid arguments.
    InvalidArguments,
    /// `set_action` outside takeover mode.
    NotInTakeover,
}

/// Answer to one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Ack {
        ack: String,
        mode: Mode,
        paused: bool,
        speed: f64,
    },
    Error {
        err: ErrorCode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
}

impl Reply {
    pub fn error(err: ErrorCode, detail: impl Into<Option<String>>) -> Self {
        Reply::Error {
            err,
            detail: detail.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Reply::Error { .. })
    }
}

/// Decodes a client message, distinguishing malformed input from unknown
/// commands and bad arguments.
pub fn parse_command(text: &str) -> Result<Command, Reply> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Reply::error(ErrorCode::Malformed, e.to_string()))?;
    let name = value
        .get("cmd")
        .and_then(|c| c.as_str())
        .ok_or_else(|| Reply::error(ErrorCode::Malformed, "expected an object with a string \"cmd\"".to_string()))?;
    if !COMMAND_NAMES.contains(&name) {
        return Err(Reply::error(ErrorCode::UnknownCommand, None));
    }
    serde_json::from_value(value).map_err(|e| Reply::error(ErrorCode::InvalidArguments, e.to_string()))
}
