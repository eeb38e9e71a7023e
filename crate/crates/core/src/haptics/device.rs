//! Simulated wearable device: one squeeze servo and one vibromotor.

use super::calibration::CalibrationProfile;
use super::mapping::{level_to_actuator_command, HapticCommand, Pulse};
use super::{HapticChannel, HapticsError};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceOutput {
    pub vibrating: bool,
    pub actuator: u32,
}

#[derive(Debug, Clone)]
pub struct WearableDevice {
    channel: HapticChannel,
    level: f64,
    target: f64,
    slew_per_s: f64,
    pulses: Vec<Pulse>,
    last_t: Option<Timestamp>,
}

impl WearableDevice {
    pub fn new(channel: HapticChannel, slew_per_s: f64) -> Self {
        Self {
            channel,
            level: 0.0,
            target: 0.0,
            slew_per_s,
            pulses: Vec::new(),
            last_t: None,
        }
    }

    pub fn channel(&self) -> HapticChannel {
        self.channel
    }

    /// Current (slew-limited) squeeze level.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn pending_pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// Takes a new squeeze target and appends the command's pulses, pushing
    /// them later if they would overlap pulses already queued.
    pub fn apply(&mut self, command: &HapticCommand) {
        self.target = command.level.clamp(0.0, 1.0);
        let mut shift = Timestamp::ZERO;
        if let (Some(last), Some(first)) = (self.pulses.last(), command.pulses.first()) {
            if first.start < last.end() {
                shift = last.end() - first.start;
            }
        }
        self.pulses.extend(command.pulses.iter().map(|p| Pulse {
            start: p.start + shift,
            duration: p.duration,
        }));
    }

    /// Advances the device to `t`.
    pub fn tick(
        &mut self,
        t: Timestamp,
        calibration: &CalibrationProfile,
    ) -> Result<DeviceOutput, HapticsError> {
        let elapsed = match self.last_t {
            Some(last) if t < last => return Err(HapticsError::TimeRegression { last, got: t }),
            Some(last) => (t - last).secs(),
            None => 0.0,
        };
        self.last_t = Some(t);

        let max_step = self.slew_per_s * elapsed;
        let delta = (self.target - self.level).clamp(-max_step, max_step);
        self.level = (self.level + delta).clamp(0.0, 1.0);

        self.pulses.retain(|p| p.end() > t);
        let vibrating = self.pulses.iter().any(|p| p.contains(t));
        Ok(DeviceOutput {
            vibrating,
            actuator: level_to_actuator_command(self.level, calibration, self.channel)?,
        })
    }
}
