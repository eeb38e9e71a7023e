//! Wearable haptic feedback: squeeze channels driven by force magnitudes,
//! vibration acknowledgments for button commands, and simulated devices.
//!
//! Channel mapping:
//!
//! | device        | squeeze source                 | vibration               |
//! |---------------|--------------------------------|-------------------------|
//! | right forearm | right virtual force magnitude  | right activation ACK    |
//! | right finger  | gripper grasping force         | gripper toggle ACK      |
//! | left forearm  | left virtual force magnitude   | left activation ACK     |
//! | left finger   | left EE external force         | control-point change ACK|

mod calibration;
mod device;
mod mapping;

pub use calibration::{CalibrationProfile, DeviceRange, DEFAULT_CALIBRATION};
pub use device::{DeviceOutput, WearableDevice};
pub use mapping::{
    build_ack_schedule, force_to_squeeze_level, level_to_actuator_command, route_feedback,
    FeedbackSources, HapticChannelMap, HapticCommand, Pulse, PulseTiming, SqueezeSource,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapticChannel {
    RightForearm,
    RightFinger,
    LeftForearm,
    LeftFinger,
}

impl HapticChannel {
    pub const ALL: [HapticChannel; 4] = [
        HapticChannel::RightForearm,
        HapticChannel::RightFinger,
        HapticChannel::LeftForearm,
        HapticChannel::LeftFinger,
    ];
}

#[derive(Debug, Error, PartialEq)]
pub enum HapticsError {
    #[error("force magnitude must be >= 0, got {0}")]
    NegativeMagnitude(f64),
    #[error("f_max must be > 0, got {0}")]
    InvalidFMax(f64),
    #[error("squeeze level must lie in [0, 1], got {0}")]
    LevelOutOfRange(f64),
    #[error("device {0:?} is not calibrated")]
    Uncalibrated(HapticChannel),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("device time went backwards: {last} -> {got}")]
    TimeRegression { last: Timestamp, got: Timestamp },
    #[error("malformed calibration file: {0}")]
    Parse(String),
}
