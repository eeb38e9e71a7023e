//! Newline-delimited JSON frames exchanged between operator station, robot
//! controller and viewers. Every frame is one object with a `type` tag.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::ButtonIndex;
use crate::control::ControlPoint;
use crate::haptics::{HapticChannel, Pulse};
use crate::robot::{ArmSide, BasePose, GripperTarget};
use crate::scenario::{ContactReport, Failure, MissionEventKind, Phase};
use crate::time::Timestamp;

pub const PROTOCOL_VERSION: u32 = 1;

/// Largest frame `decode_message` accepts.
pub const MAX_FRAME_BYTES: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("protocol version mismatch: expected {expected}, got {got}")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("frame of {0} bytes exceeds the size limit")]
    TooLarge(usize),
    #[error("message contains a non-finite number")]
    NonFinite,
    #[error("timestamp {got} precedes {last} on the same stream")]
    NonMonotonic { last: Timestamp, got: Timestamp },
    #[error("role `{0:?}` is already taken")]
    RoleTaken(SessionRole),
    #[error("expected a handshake as first message")]
    NoHandshake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionRole {
    Operator,
    UiViewer,
    CommandChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ButtonPress {
    pub side: ArmSide,
    pub button: ButtonIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStateFrame {
    pub t: Timestamp,
    pub q_right: Vec<f64>,
    pub q_left: Vec<f64>,
    pub base: BasePose,
    pub base_velocity: [f64; 3],
    pub gripper_aperture: f64,
    pub gripper_target: GripperTarget,
    pub contact: ContactReport,
    pub right_active: bool,
    pub left_active: bool,
    pub control_point: ControlPoint,
    /// Virtual rope forces, world frame.
    pub right_force: [f64; 3],
    pub left_force: [f64; 3],
    /// End-effector positions, world frame.
    pub right_ee: [f64; 3],
    pub left_ee: [f64; 3],
    pub bottle: [f64; 3],
    pub phase: Phase,
    pub failures: Vec<Failure>,
    pub t_start: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum WireMessage {
    Handshake {
        version: u32,
        role: SessionRole,
    },
    OperatorInput {
        t: Timestamp,
        right_wrist: [f64; 3],
        left_wrist: [f64; 3],
        #[serde(default)]
        buttons: Vec<ButtonPress>,
    },
    ExternalCommand {
        t: Timestamp,
        token: String,
    },
    FeedbackCommand {
        t: Timestamp,
        device: HapticChannel,
        level: f64,
        pulses: Vec<Pulse>,
    },
    RobotState(Box<RobotStateFrame>),
    MissionEvent {
        t: Timestamp,
        kind: MissionEventKind,
    },
}

const KNOWN_TYPES: [&str; 6] = [
    "Handshake",
    "OperatorInput",
    "ExternalCommand",
    "FeedbackCommand",
    "RobotState",
    "MissionEvent",
];

impl WireMessage {
    /// Stream timestamp; handshakes carry none.
    pub fn t(&self) -> Option<Timestamp> {
        match self {
            WireMessage::Handshake { .. } => None,
            WireMessage::OperatorInput { t, .. }
            | WireMessage::ExternalCommand { t, .. }
            | WireMessage::FeedbackCommand { t, .. }
            | WireMessage::MissionEvent { t, .. } => Some(*t),
            WireMessage::RobotState(s) => Some(s.t),
        }
    }

    /// Messages flowing from the operator side into the controller.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            WireMessage::OperatorInput { .. } | WireMessage::ExternalCommand { .. }
        )
    }

    /// Messages produced by the controller.
    pub fn is_output(&self) -> bool {
        matches!(
            self,
            WireMessage::FeedbackCommand { .. }
                | WireMessage::RobotState(_)
                | WireMessage::MissionEvent { .. }
        )
    }

    pub fn handshake(role: SessionRole) -> Self {
        WireMessage::Handshake {
            version: PROTOCOL_VERSION,
            role,
        }
    }

    fn is_finite(&self) -> bool {
        fn all(v: &[f64]) -> bool {
            v.iter().all(|x| x.is_finite())
        }
        match self {
            WireMessage::OperatorInput {
                right_wrist,
                left_wrist,
                ..
            } => all(right_wrist) && all(left_wrist),
            WireMessage::FeedbackCommand { level, .. } => level.is_finite(),
            WireMessage::RobotState(s) => {
                let c = &s.contact;
                all(&s.q_right)
                    && all(&s.q_left)
                    && all(&s.base.position)
                    && s.base.heading.is_finite()
                    && all(&s.base_velocity)
                    && all(&[
                        s.gripper_aperture,
                        c.grasp_force,
                        c.left_contact_force,
                        c.button_force,
                    ])
                    && all(&s.right_force)
                    && all(&s.left_force)
                    && all(&s.right_ee)
                    && all(&s.left_ee)
                    && all(&s.bottle)
            }
            _ => true,
        }
    }
}

/// One frame, without the trailing newline.
pub fn encode_message(message: &WireMessage) -> Result<Vec<u8>, ProtocolError> {
    if !message.is_finite() {
        return Err(ProtocolError::NonFinite);
    }
    serde_json::to_vec(message).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

pub fn encode_line(message: &WireMessage) -> Result<String, ProtocolError> {
    let bytes = encode_message(message)?;
    Ok(String::from_utf8(bytes).expect("serde_json emits UTF-8"))
}

/// Decodes one frame; a single trailing `\n` (or `\r\n`) is tolerated.
pub fn decode_message(frame: &[u8]) -> Result<WireMessage, ProtocolError> {
    if frame.len() > MAX_FRAME_BYTES {
        return Err(ProtocolError::TooLarge(frame.len()));
    }
    let frame = frame.strip_suffix(b"\n").unwrap_or(frame);
    let frame = frame.strip_suffix(b"\r").unwrap_or(frame);
    if frame.contains(&b'\n') {
        return Err(ProtocolError::Malformed("embedded newline".into()));
    }
    let message: WireMessage = match serde_json::from_slice(frame) {
        Ok(m) => m,
        Err(e) => return Err(classify(frame, e)),
    };
    if let WireMessage::Handshake { version, .. } = message {
        if version != PROTOCOL_VERSION {
            return Err(ProtocolError::VersionMismatch {
                expected: PROTOCOL_VERSION,
                got: version,
            });
        }
    }
    Ok(message)
}

fn classify(frame: &[u8], err: serde_json::Error) -> ProtocolError {
    #[derive(Deserialize)]
    struct Tag {
        #[serde(rename = "type")]
        kind: String,
    }
    match serde_json::from_slice::<Tag>(frame) {
        Ok(tag) if !KNOWN_TYPES.contains(&tag.kind.as_str()) => {
            ProtocolError::UnknownType(tag.kind)
        }
        _ => ProtocolError::Malformed(err.to_string()),
    }
}

/// Rejects timestamps that go backwards on one stream.
#[derive(Debug, Clone, Default)]
pub struct MonotoneStream {
    last: Option<Timestamp>,
}

impl MonotoneStream {
    pub fn check(&mut self, message: &WireMessage) -> Result<(), ProtocolError> {
        if let Some(t) = message.t() {
            if let Some(last) = self.last {
                if t < last {
                    return Err(ProtocolError::NonMonotonic { last, got: t });
                }
            }
            self.last = Some(t);
        }
        Ok(())
    }
}

/// Connected roles of one session. Only the operator role is exclusive.
#[derive(Debug, Clone, Default)]
pub struct RoleRegistry {
    operator: bool,
    viewers: usize,
    command_channels: usize,
}

impl RoleRegistry {
    pub fn release(&mut self, role: SessionRole) {
        match role {
            SessionRole::Operator => self.operator = false,
            SessionRole::UiViewer => self.viewers = self.viewers.saturating_sub(1),
            SessionRole::CommandChannel => {
                self.command_channels = self.command_channels.saturating_sub(1)
            }
        }
    }

    pub fn operator_connected(&self) -> bool {
        self.operator
    }

    pub fn viewers(&self) -> usize {
        self.viewers
    }
}

/// Accepts or rejects a client's opening message and claims its role.
pub fn session_handshake(
    registry: &mut RoleRegistry,
    hello: &WireMessage,
) -> Result<SessionRole, ProtocolError> {
    let WireMessage::Handshake { version, role } = *hello else {
        return Err(ProtocolError::NoHandshake);
    };
    if version != PROTOCOL_VERSION {
        return Err(ProtocolError::VersionMismatch {
            expected: PROTOCOL_VERSION,
            got: version,
        });
    }
    match role {
        SessionRole::Operator if registry.operator => return Err(ProtocolError::RoleTaken(role)),
        SessionRole::Operator => registry.operator = true,
        SessionRole::UiViewer => registry.viewers += 1,
        SessionRole::CommandChannel => registry.command_channels += 1,
    }
    Ok(role)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input() -> WireMessage {
        WireMessage::OperatorInput {
            t: Timestamp::from_micros(10_000),
            right_wrist: [0.1, 0.0, 0.0],
            left_wrist: [0.0, 0.0, 0.0],
            buttons: vec![ButtonPress {
                side: ArmSide::Left,
                button: ButtonIndex::Button2,
            }],
        }
    }

    #[test]
    fn operator_input_round_trip() {
        let m = input();
        let bytes = encode_message(&m).unwrap();
        assert_eq!(decode_message(&bytes).unwrap(), m);
        let text = String::from_utf8(bytes).unwrap();
        assert!(
            text.starts_with(r#"{"type":"OperatorInput","t":0.010000,"#),
            "{text}"
        );
    }

    #[test]
    fn feedback_level_literal() {
        let m = WireMessage::FeedbackCommand {
            t: Timestamp::ZERO,
            device: HapticChannel::RightForearm,
            level: 0.5,
            pulses: vec![],
        };
        let text = encode_line(&m).unwrap();
        assert!(text.contains(r#""level":0.5"#), "{text}");
        assert!(text.contains(r#""device":"right_forearm""#), "{text}");
    }

    #[test]
    fn rejects_bad_frames() {
        assert_eq!(
            decode_message(br#"{"type":"bogus"}"#),
            Err(ProtocolError::UnknownType("bogus".into()))
        );
        assert!(matches!(
            decode_message(b"not json"),
            Err(ProtocolError::Malformed(_))
        ));
        assert!(matches!(
            decode_message(br#"{"type":"ExternalCommand","t":1.0,"token":"RIGHT","x":1}"#),
            Err(ProtocolError::Malformed(_))
        ));
        assert!(matches!(
            decode_message(br#"{"type":"Handshake","version":99,"role":"operator"}"#),
            Err(ProtocolError::VersionMismatch { got: 99, .. })
        ));
        assert!(matches!(
            decode_message(b"{}\n{}"),
            Err(ProtocolError::Malformed(_))
        ));
    }

    #[test]
    fn robot_state_rejects_extra_fields() {
        let frame = RobotStateFrame {
            t: Timestamp::ZERO,
            q_right: vec![0.0; 6],
            q_left: vec![0.0; 6],
            base: BasePose::new([0.0; 3], 0.0),
            base_velocity: [0.0; 3],
            gripper_aperture: 0.1,
            gripper_target: GripperTarget::Open,
            contact: ContactReport::default(),
            right_active: false,
            left_active: false,
            control_point: ControlPoint::LeftEE,
            right_force: [0.0; 3],
            left_force: [0.0; 3],
            right_ee: [0.0; 3],
            left_ee: [0.0; 3],
            bottle: [0.0; 3],
            phase: Phase::PickBottle,
            failures: vec![],
            t_start: None,
        };
        let m = WireMessage::RobotState(Box::new(frame));
        let text = encode_line(&m).unwrap();
        assert_eq!(decode_message(text.as_bytes()).unwrap(), m);
        let tampered = text.replacen('{', r#"{"extra":1,"#, 1);
        assert!(decode_message(tampered.as_bytes()).is_err());
    }

    #[test]
    fn non_finite_is_not_encoded() {
        let m = WireMessage::OperatorInput {
            t: Timestamp::ZERO,
            right_wrist: [f64::NAN, 0.0, 0.0],
            left_wrist: [0.0; 3],
            buttons: vec![],
        };
        assert_eq!(encode_message(&m), Err(ProtocolError::NonFinite));
    }

    #[test]
    fn handshake_roles() {
        let mut reg = RoleRegistry::default();
        let op = WireMessage::handshake(SessionRole::Operator);
        assert_eq!(session_handshake(&mut reg, &op), Ok(SessionRole::Operator));
        assert_eq!(
            session_handshake(&mut reg, &op),
            Err(ProtocolError::RoleTaken(SessionRole::Operator))
        );
        let viewer = WireMessage::handshake(SessionRole::UiViewer);
        assert_eq!(
            session_handshake(&mut reg, &viewer),
            Ok(SessionRole::UiViewer)
        );
        assert_eq!(
            session_handshake(&mut reg, &input()),
            Err(ProtocolError::NoHandshake)
        );
        reg.release(SessionRole::Operator);
        assert_eq!(session_handshake(&mut reg, &op), Ok(SessionRole::Operator));
        let old = WireMessage::Handshake {
            version: 0,
            role: SessionRole::UiViewer,
        };
        assert!(matches!(
            session_handshake(&mut reg, &old),
            Err(ProtocolError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn monotone_streams() {
        let mut s = MonotoneStream::default();
        s.check(&input()).unwrap();
        s.check(&WireMessage::handshake(SessionRole::UiViewer))
            .unwrap();
        let early = WireMessage::ExternalCommand {
            t: Timestamp::ZERO,
            token: "RIGHT".into(),
        };
        assert!(matches!(
            s.check(&early),
            Err(ProtocolError::NonMonotonic { .. })
        ));
    }
}
