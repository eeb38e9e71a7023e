//! The four discrete operator commands: per-arm rope activation, gripper
//! open/close and the left control-point switch.
//!
//! | command                  | external token | button         | ACK channel   |
//! |--------------------------|----------------|----------------|---------------|
//! | right rope activation    | `RIGHT`        | right button 1 | right forearm |
//! | left rope activation     | `LEFT`         | left button 1  | left forearm  |
//! | open/close gripper       | `GRIPPER`      | right button 2 | right finger  |
//! | left EE/base switch      | `CHANGE`       | left button 2  | left finger   |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControlPoint;
use crate::haptics::HapticChannel;
use crate::robot::{ArmSide, GripperTarget};
use crate::time::Timestamp;

/// Same-button presses closer than this are coalesced.
pub const DEBOUNCE_WINDOW: Timestamp = Timestamp::from_micros(200_000);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommandError {
    #[error("unknown command token `{0}`")]
    UnknownToken(String),
    #[error("button event at {got} precedes previous event at {last}")]
    TimeRegression { last: Timestamp, got: Timestamp },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ButtonIndex {
    Button1,
    Button2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ButtonEvent {
    pub side: ArmSide,
    pub button: ButtonIndex,
    pub t: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Command {
    ToggleRight,
    ToggleLeft,
    ToggleGripper,
    SwitchControlPoint,
}

impl Command {
    pub const ALL: [Command; 4] = [
        Command::ToggleRight,
        Command::ToggleLeft,
        Command::ToggleGripper,
        Command::SwitchControlPoint,
    ];

    pub fn from_button(side: ArmSide, button: ButtonIndex) -> Self {
        match (side, button) {
            (ArmSide::Right, ButtonIndex::Button1) => Command::ToggleRight,
            (ArmSide::Left, ButtonIndex::Button1) => Command::ToggleLeft,
            (ArmSide::Right, ButtonIndex::Button2) => Command::ToggleGripper,
            (ArmSide::Left, ButtonIndex::Button2) => Command::SwitchControlPoint,
        }
    }

    pub fn button(self) -> (ArmSide, ButtonIndex) {
        match self {
            Command::ToggleRight => (ArmSide::Right, ButtonIndex::Button1),
            Command::ToggleLeft => (ArmSide::Left, ButtonIndex::Button1),
            Command::ToggleGripper => (ArmSide::Right, ButtonIndex::Button2),
            Command::SwitchControlPoint => (ArmSide::Left, ButtonIndex::Button2),
        }
    }

    pub fn ack_channel(self) -> HapticChannel {
        match self {
            Command::ToggleRight => HapticChannel::RightForearm,
            Command::ToggleGripper => HapticChannel::RightFinger,
            Command::ToggleLeft => HapticChannel::LeftForearm,
            Command::SwitchControlPoint => HapticChannel::LeftFinger,
        }
    }
}

/// Tokens of the external command channel, standing in for a second
/// operator who executes spoken commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExternalCommand {
    Right,
    Left,
    Gripper,
    Change,
}

impl ExternalCommand {
    pub fn command(self) -> Command {
        match self {
            ExternalCommand::Right => Command::ToggleRight,
            ExternalCommand::Left => Command::ToggleLeft,
            ExternalCommand::Gripper => Command::ToggleGripper,
            ExternalCommand::Change => Command::SwitchControlPoint,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ExternalCommand::Right => "RIGHT",
            ExternalCommand::Left => "LEFT",
            ExternalCommand::Gripper => "GRIPPER",
            ExternalCommand::Change => "CHANGE",
        }
    }
}

impl FromStr for ExternalCommand {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RIGHT" => Ok(ExternalCommand::Right),
            "LEFT" => Ok(ExternalCommand::Left),
            "GRIPPER" => Ok(ExternalCommand::Gripper),
            "CHANGE" => Ok(ExternalCommand::Change),
            _ => Err(CommandError::UnknownToken(s.to_owned())),
        }
    }
}

impl fmt::Display for ExternalCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AckKind {
    Engage,
    Disengage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AckRequest {
    pub channel: HapticChannel,
    pub kind: AckKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommandState {
    pub right_active: bool,
    pub left_active: bool,
    pub gripper: GripperTarget,
    /// `LeftEE` or `Base`.
    pub left_control_point: ControlPoint,
}

impl Default for CommandState {
    fn default() -> Self {
        Self {
            right_active: false,
            left_active: false,
            gripper: GripperTarget::Open,
            left_control_point: ControlPoint::LeftEE,
        }
    }
}

impl CommandState {
    pub fn is_active(&self, side: ArmSide) -> bool {
        match side {
            ArmSide::Right => self.right_active,
            ArmSide::Left => self.left_active,
        }
    }
}

/// Applies one command. "Engaged" means active, `Closed` or `Base`.
pub fn apply_command(state: CommandState, command: Command) -> (CommandState, AckRequest) {
    let mut next = state;
    let engaged = match command {
        Command::ToggleRight => {
            next.right_active = !state.right_active;
            next.right_active
        }
        Command::ToggleLeft => {
            next.left_active = !state.left_active;
            next.left_active
        }
        Command::ToggleGripper => {
            next.gripper = state.gripper.toggled();
            next.gripper == GripperTarget::Closed
        }
        Command::SwitchControlPoint => {
            next.left_control_point = match state.left_control_point {
                ControlPoint::Base => ControlPoint::LeftEE,
                _ => ControlPoint::Base,
            };
            next.left_control_point == ControlPoint::Base
        }
    };
    let kind = if engaged {
        AckKind::Engage
    } else {
        AckKind::Disengage
    };
    (
        next,
        AckRequest {
            channel: command.ack_channel(),
            kind,
        },
    )
}

pub fn apply_button_event(state: CommandState, event: &ButtonEvent) -> (CommandState, AckRequest) {
    apply_command(state, Command::from_button(event.side, event.button))
}

pub fn apply_external_command(
    state: CommandState,
    command: ExternalCommand,
) -> (CommandState, AckRequest) {
    apply_command(state, command.command())
}

/// Parses a raw token and applies it.
pub fn apply_external_token(
    state: CommandState,
    token: &str,
) -> Result<(CommandState, AckRequest), CommandError> {
    Ok(apply_external_command(state, token.parse()?))
}

/// Arms that went from inactive to active between two states; each needs its
/// rope re-anchored.
pub fn on_activation_edges(before: &CommandState, after: &CommandState) -> Vec<ArmSide> {
    [ArmSide::Right, ArmSide::Left]
        .into_iter()
        .filter(|&side| !before.is_active(side) && after.is_active(side))
        .collect()
}

/// Drops presses of the same button that follow an accepted press within
/// [`DEBOUNCE_WINDOW`].
#[derive(Debug, Clone, Default)]
pub struct Debouncer {
    last_accepted: BTreeMap<(ArmSide, ButtonIndex), Timestamp>,
    last_seen: Option<Timestamp>,
}

impl Debouncer {
    pub fn new() -> Self {
        Self::default()
    }

    /// `Ok(true)` if the event should be applied.
    pub fn accept(&mut self, event: &ButtonEvent) -> Result<bool, CommandError> {
        if let Some(last) = self.last_seen {
            if event.t < last {
                return Err(CommandError::TimeRegression { last, got: event.t });
            }
        }
        self.last_seen = Some(event.t);
        let key = (event.side, event.button);
        match self.last_accepted.get(&key) {
            Some(&prev) if event.t - prev < DEBOUNCE_WINDOW => Ok(false),
            _ => {
                self.last_accepted.insert(key, event.t);
                Ok(true)
            }
        }
    }
}
