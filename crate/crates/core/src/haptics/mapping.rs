use serde::{Deserialize, Serialize};

use super::calibration::CalibrationProfile;
use super::{HapticChannel, HapticsError};
use crate::command::{AckKind, AckRequest, Command};
use crate::time::Timestamp;

/// What drives the squeeze belt of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SqueezeSource {
    RightVirtualForce,
    LeftVirtualForce,
    GripperGraspForce,
    LeftEEContactForce,
}

/// Which squeeze source and which command ACK each channel renders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HapticChannelMap {
    pub entries: [(HapticChannel, SqueezeSource, Command); 4],
}

impl HapticChannelMap {
    pub fn squeeze_source(&self, channel: HapticChannel) -> SqueezeSource {
        self.entries
            .iter()
            .find(|e| e.0 == channel)
            .map(|e| e.1)
            .expect("all channels mapped")
    }

    pub fn ack_command(&self, channel: HapticChannel) -> Command {
        self.entries
            .iter()
            .find(|e| e.0 == channel)
            .map(|e| e.2)
            .expect("all channels mapped")
    }

    pub fn channel_for_source(&self, source: SqueezeSource) -> HapticChannel {
        self.entries
            .iter()
            .find(|e| e.1 == source)
            .map(|e| e.0)
            .expect("all sources mapped")
    }
}

impl Default for HapticChannelMap {
    fn default() -> Self {
        Self {
            entries: [
                (
                    HapticChannel::RightForearm,
                    SqueezeSource::RightVirtualForce,
                    Command::ToggleRight,
                ),
                (
                    HapticChannel::RightFinger,
                    SqueezeSource::GripperGraspForce,
                    Command::ToggleGripper,
                ),
                (
                    HapticChannel::LeftForearm,
                    SqueezeSource::LeftVirtualForce,
                    Command::ToggleLeft,
                ),
                (
                    HapticChannel::LeftFinger,
                    SqueezeSource::LeftEEContactForce,
                    Command::SwitchControlPoint,
                ),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub start: Timestamp,
    pub duration: Timestamp,
}

impl Pulse {
    pub fn end(&self) -> Timestamp {
        self.start + self.duration
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseTiming {
    pub pulse: Timestamp,
    pub gap: Timestamp,
}

impl Default for PulseTiming {
    fn default() -> Self {
        Self {
            pulse: Timestamp::from_micros(150_000),
            gap: Timestamp::from_micros(100_000),
        }
    }
}

/// Squeeze command for one wearable device.
#[derive(Debug, Clone, PartialEq)]
pub struct HapticCommand {
    pub device: HapticChannel,
    /// In [0, 1].
    pub level: f64,
    pub pulses: Vec<Pulse>,
}

/// Linear map of a force magnitude onto [0, 1], saturating at `f_max`.
pub fn force_to_squeeze_level(magnitude: f64, f_max: f64) -> Result<f64, HapticsError> {
    if !(f_max.is_finite() && f_max > 0.0) {
        return Err(HapticsError::InvalidFMax(f_max));
    }
    if magnitude.is_nan() || magnitude < 0.0 {
        return Err(HapticsError::NegativeMagnitude(magnitude));
    }
    Ok((magnitude / f_max).min(1.0))
}

pub fn level_to_actuator_command(
    level: f64,
    calibration: &CalibrationProfile,
    device: HapticChannel,
) -> Result<u32, HapticsError> {
    if !(0.0..=1.0).contains(&level) {
        return Err(HapticsError::LevelOutOfRange(level));
    }
    let range = calibration
        .devices
        .get(&device)
        .ok_or(HapticsError::Uncalibrated(device))?;
    let span = f64::from(range.max - range.min);
    Ok(range.min + (level * span).round() as u32)
}

/// One short pulse to engage, two to disengage.
pub fn build_ack_schedule(kind: AckKind, t0: Timestamp, timing: PulseTiming) -> Vec<Pulse> {
    let first = Pulse {
        start: t0,
        duration: timing.pulse,
    };
    match kind {
        AckKind::Engage => vec![first],
        AckKind::Disengage => vec![
            first,
            Pulse {
                start: t0 + timing.pulse + timing.gap,
                duration: timing.pulse,
            },
        ],
    }
}

/// Force magnitudes feeding the squeeze channels for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeedbackSources {
    pub right_force: f64,
    pub left_force: f64,
    pub grasp_force: f64,
    pub left_contact_force: f64,
}

impl FeedbackSources {
    pub fn get(&self, source: SqueezeSource) -> f64 {
        match source {
            SqueezeSource::RightVirtualForce => self.right_force,
            SqueezeSource::LeftVirtualForce => self.left_force,
            SqueezeSource::GripperGraspForce => self.grasp_force,
            SqueezeSource::LeftEEContactForce => self.left_contact_force,
        }
    }
}

/// Builds the four device commands for one tick. ACK pulses go to the channel
/// owning the command; several ACKs on one channel are laid out back to back
/// so pulses never overlap. With haptics disabled every level is zero and no
/// pulse is scheduled.
pub fn route_feedback(
    sources: &FeedbackSources,
    acks: &[(AckRequest, Timestamp)],
    calibration: &CalibrationProfile,
    enabled: bool,
) -> Result<[HapticCommand; 4], HapticsError> {
    let map = HapticChannelMap::default();
    let timing = calibration.timing();
    let mut out = HapticChannel::ALL.map(|device| HapticCommand {
        device,
        level: 0.0,
        pulses: Vec::new(),
    });
    for cmd in &mut out {
        let magnitude = sources.get(map.squeeze_source(cmd.device));
        let level = force_to_squeeze_level(magnitude, calibration.f_max(cmd.device))?;
        if !enabled {
            continue;
        }
        cmd.level = level;
        for (ack, t) in acks.iter().filter(|(a, _)| a.channel == cmd.device) {
            let start = match cmd.pulses.last() {
                Some(last) => (*t).max(last.end() + timing.gap),
                None => *t,
            };
            cmd.pulses
                .extend(build_ack_schedule(ack.kind, start, timing));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squeeze_levels() {
        assert_eq!(force_to_squeeze_level(0.0, 20.0), Ok(0.0));
        assert_eq!(force_to_squeeze_level(10.0, 20.0), Ok(0.5));
        assert_eq!(force_to_squeeze_level(30.0, 20.0), Ok(1.0));
        assert_eq!(
            force_to_squeeze_level(-1.0, 20.0),
            Err(HapticsError::NegativeMagnitude(-1.0))
        );
        assert!(force_to_squeeze_level(1.0, 0.0).is_err());
    }

    #[test]
    fn actuator_interpolation() {
        let cal = CalibrationProfile::default();
        let dev = HapticChannel::RightForearm;
        assert_eq!(level_to_actuator_command(0.0, &cal, dev), Ok(1000));
        assert_eq!(level_to_actuator_command(1.0, &cal, dev), Ok(2000));
        assert_eq!(level_to_actuator_command(0.5, &cal, dev), Ok(1500));
        assert!(level_to_actuator_command(1.5, &cal, dev).is_err());
        let mut partial = cal.clone();
        partial.devices.remove(&dev);
        assert_eq!(
            level_to_actuator_command(0.5, &partial, dev),
            Err(HapticsError::Uncalibrated(dev))
        );
    }

    #[test]
    fn ack_schedules() {
        let timing = PulseTiming::default();
        let engage = build_ack_schedule(AckKind::Engage, Timestamp::ZERO, timing);
        assert_eq!(engage.len(), 1);
        let dis = build_ack_schedule(AckKind::Disengage, Timestamp::ZERO, timing);
        assert_eq!(dis.len(), 2);
        assert_eq!(dis[1].start, Timestamp::from_micros(250_000));
        assert!(dis[0].end() <= dis[1].start);
    }

    #[test]
    fn routing_follows_channel_table() {
        let cal = CalibrationProfile::default();
        let sources = FeedbackSources {
            right_force: 4.0,
            left_force: 0.0,
            grasp_force: 5.0,
            left_contact_force: 2.5,
        };
        let out = route_feedback(&sources, &[], &cal, true).unwrap();
        assert_eq!(out[0].device, HapticChannel::RightForearm);
        assert!((out[0].level - 0.2).abs() < 1e-15);
        assert_eq!(out[1].device, HapticChannel::RightFinger);
        assert_eq!(out[1].level, 0.5);
        assert_eq!(out[2].level, 0.0);
        assert_eq!(out[3].level, 0.25);
    }

    #[test]
    fn acks_land_on_their_channel_without_overlap() {
        let cal = CalibrationProfile::default();
        let t = Timestamp::from_micros(1_000_000);
        let acks = [
            (
                AckRequest {
                    channel: HapticChannel::LeftFinger,
                    kind: AckKind::Disengage,
                },
                t,
            ),
            (
                AckRequest {
                    channel: HapticChannel::LeftFinger,
                    kind: AckKind::Engage,
                },
                t,
            ),
        ];
        let out = route_feedback(&FeedbackSources::default(), &acks, &cal, true).unwrap();
        let pulses = &out[3].pulses;
        assert_eq!(pulses.len(), 3);
        assert!(pulses.windows(2).all(|w| w[0].end() <= w[1].start));
        assert!(out[..3].iter().all(|c| c.pulses.is_empty()));
    }

    #[test]
    fn disabled_is_silent() {
        let cal = CalibrationProfile::default();
        let sources = FeedbackSources {
            right_force: 12.0,
            left_force: 3.0,
            grasp_force: 5.0,
            left_contact_force: 9.0,
        };
        let acks = [(
            AckRequest {
                channel: HapticChannel::RightForearm,
                kind: AckKind::Engage,
            },
            Timestamp::ZERO,
        )];
        let out = route_feedback(&sources, &acks, &cal, false).unwrap();
        assert!(out.iter().all(|c| c.level == 0.0 && c.pulses.is_empty()));
    }
}
