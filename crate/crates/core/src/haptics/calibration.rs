use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mapping::PulseTiming;
use super::{HapticChannel, HapticsError};
use crate::time::Timestamp;

pub const DEFAULT_CALIBRATION: &str = include_str!("../../../../calibration/default.json");

/// Actuator command range of one device, in abstract actuator units (servo
/// pulse width in microseconds by convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRange {
    pub min: u32,
    pub max: u32,
}

/// Per-user tuning of the four wearable devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProfile {
    pub devices: BTreeMap<HapticChannel, DeviceRange>,
    /// Source magnitude (N) at which each channel saturates.
    pub f_max: BTreeMap<HapticChannel, f64>,
    pub pulse_s: f64,
    pub gap_s: f64,
    /// Squeeze slew-rate limit, levels per second.
    pub slew_per_s: f64,
}

impl CalibrationProfile {
    pub fn from_json(text: &str) -> Result<Self, HapticsError> {
        let cal: CalibrationProfile =
            serde_json::from_str(text).map_err(|e| HapticsError::Parse(e.to_string()))?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<(), HapticsError> {
        for (channel, range) in &self.devices {
            if range.min >= range.max {
                return Err(HapticsError::InvalidCalibration(format!(
                    "{channel:?}: min {} must be below max {}",
                    range.min, range.max
                )));
            }
        }
        for (channel, f_max) in &self.f_max {
            if !(f_max.is_finite() && *f_max > 0.0) {
                return Err(HapticsError::InvalidCalibration(format!(
                    "{channel:?}: f_max must be > 0"
                )));
            }
        }
        for channel in HapticChannel::ALL {
            if !self.f_max.contains_key(&channel) {
                return Err(HapticsError::InvalidCalibration(format!(
                    "{channel:?}: missing f_max"
                )));
            }
        }
        if !(self.pulse_s > 0.0 && self.gap_s > 0.0 && self.slew_per_s > 0.0) {
            return Err(HapticsError::InvalidCalibration(
                "pulse_s, gap_s and slew_per_s must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn f_max(&self, channel: HapticChannel) -> f64 {
        self.f_max[&channel]
    }

    pub fn timing(&self) -> PulseTiming {
        PulseTiming {
            pulse: Timestamp::from_secs(self.pulse_s),
            gap: Timestamp::from_secs(self.gap_s),
        }
    }
}

impl Default for CalibrationProfile {
    fn default() -> Self {
        Self::from_json(DEFAULT_CALIBRATION).expect("shipped calibration is valid")
    }
}
