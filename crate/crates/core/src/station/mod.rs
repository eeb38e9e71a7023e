//! Operator station boundary: wire protocol, session configuration, the
//! deterministic controller stack, trial logs and replay, scripted operators.

mod config;
mod log;
mod protocol;
mod script;
mod stack;

use thiserror::Error;

use crate::command::CommandError;
use crate::control::ControlError;
use crate::haptics::HapticsError;
use crate::robot::ModelError;
use crate::scenario::ScenarioError;
use crate::time::Timestamp;

pub use config::{Condition, ConfigSnapshot, SessionConfigFile};
pub use log::{
    replay, report_from_log, run_headless, Divergence, HeadlessSummary, LogEntry, LogWriter,
    ReplayReport, TrialLog,
};
pub use protocol::{
    decode_message, encode_line, encode_message, session_handshake, ButtonPress, MonotoneStream,
    ProtocolError, RobotStateFrame, RoleRegistry, SessionRole, WireMessage, MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
};
pub use script::{scripted_operator, Script, ScriptButton, ScriptEvent};
pub use stack::{Stack, TickRecord};

pub const DEFAULT_TCP_PORT: u16 = 7465;
pub const DEFAULT_HTTP_PORT: u16 = 7466;

#[derive(Debug, Error)]
pub enum StationError {
    #[error("I/O: {0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("script: {0}")]
    Script(String),
    #[error("corrupt log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("not an operator input: {0}")]
    UnexpectedMessage(String),
    #[error("input at {got} arrived after input at {last}")]
    InputOrder { last: Timestamp, got: Timestamp },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Haptics(#[from] HapticsError),
    #[error(transparent)]
    Command(#[from] CommandError),
}
