use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::protocol::PROTOCOL_VERSION;
use super::StationError;
use crate::control::{ControlProfile, CENTAURO_PAPER_PROFILE};
use crate::haptics::{CalibrationProfile, DEFAULT_CALIBRATION};
use crate::robot::{RobotDescription, RobotModel, DEFAULT_ROBOT};
use crate::scenario::{ScenarioDoc, World, PAPER_MISSION};

/// Operator interface available in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// External keyboard commands only, no haptics.
    A,
    /// Ring buttons, no haptics.
    B,
    /// Ring buttons and haptic feedback.
    C,
}

impl Condition {
    pub fn buttons_enabled(self) -> bool {
        self != Condition::A
    }

    pub fn external_commands_enabled(self) -> bool {
        self == Condition::A
    }

    pub fn haptics_enabled(self) -> bool {
        self == Condition::C
    }
}

impl FromStr for Condition {
    type Err = StationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Condition::A),
            "B" => Ok(Condition::B),
            "C" => Ok(Condition::C),
            _ => Err(StationError::Config(format!(
                "unknown condition `{s}` (expected A, B or C)"
            ))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

fn default_telemetry_hz() -> u32 {
    60
}

fn default_right_rest() -> [f64; 3] {
    [0.3, -0.2, 1.0]
}

fn default_left_rest() -> [f64; 3] {
    [0.3, 0.2, 1.0]
}

/// Session configuration file. Paths are relative to the file; any omitted
/// component falls back to the shipped default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfigFile {
    #[serde(default)]
    pub robot: Option<PathBuf>,
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default = "default_condition")]
    pub condition: Condition,
    #[serde(default = "default_telemetry_hz")]
    pub telemetry_hz: u32,
}

fn default_condition() -> Condition {
    Condition::C
}

/// Fully resolved configuration; written as the first line of every trial
/// log so a log replays without the original files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub protocol_version: u32,
    pub condition: Condition,
    pub telemetry_hz: u32,
    pub robot: RobotDescription,
    pub profile: ControlProfile,
    pub calibration: CalibrationProfile,
    pub scenario: ScenarioDoc,
    /// Operator wrist poses before the first input arrives.
    #[serde(default = "default_right_rest")]
    pub right_wrist_rest: [f64; 3],
    #[serde(default = "default_left_rest")]
    pub left_wrist_rest: [f64; 3],
}

fn read(base: &Path, path: &Option<PathBuf>, fallback: &str) -> Result<String, StationError> {
    match path {
        None => Ok(fallback.to_owned()),
        Some(p) => {
            let full = base.join(p);
            std::fs::read_to_string(&full)
                .map_err(|e| StationError::Io(format!("{}: {e}", full.display())))
        }
    }
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T, StationError> {
    serde_json::from_str(text).map_err(|e| StationError::Config(format!("{what}: {e}")))
}

impl ConfigSnapshot {
    /// The shipped robot, `centauro_paper` profile, default calibration and mission.
    pub fn shipped(condition: Condition) -> Self {
        Self::from_texts(
            condition,
            default_telemetry_hz(),
            DEFAULT_ROBOT,
            CENTAURO_PAPER_PROFILE,
            DEFAULT_CALIBRATION,
            PAPER_MISSION,
        )
        .expect("shipped configuration is valid")
    }

    pub fn from_texts(
        condition: Condition,
        telemetry_hz: u32,
        robot: &str,
        profile: &str,
        calibration: &str,
        scenario: &str,
    ) -> Result<Self, StationError> {
        let snapshot = Self {
            protocol_version: PROTOCOL_VERSION,
            condition,
            telemetry_hz,
            robot: parse("robot", robot)?,
            profile: parse("profile", profile)?,
            calibration: parse("calibration", calibration)?,
            scenario: parse("scenario", scenario)?,
            right_wrist_rest: default_right_rest(),
            left_wrist_rest: default_left_rest(),
        };
        snapshot.validate()?;
        Ok(snapshot)
    }

    /// Loads a session file and everything it points to.
    pub fn load(path: &Path) -> Result<Self, StationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StationError::Io(format!("{}: {e}", path.display())))?;
        let file: SessionConfigFile = parse("session config", &text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_texts(
            file.condition,
            file.telemetry_hz,
            &read(base, &file.robot, DEFAULT_ROBOT)?,
            &read(base, &file.profile, CENTAURO_PAPER_PROFILE)?,
            &read(base, &file.calibration, DEFAULT_CALIBRATION)?,
            &read(base, &file.scenario, PAPER_MISSION)?,
        )
    }

    pub fn validate(&self) -> Result<(), StationError> {
        if self.protocol_version != PROTOCOL_VERSION {
            return Err(StationError::Config(format!(
                "snapshot protocol version {} (expected {PROTOCOL_VERSION})",
                self.protocol_version
            )));
        }
        let model = self.model()?;
        self.profile.validate()?;
        self.calibration.validate()?;
        World::from_doc(&self.scenario)?;
        if let Some(aperture_max) = self.scenario.gripper.aperture_max {
            if aperture_max != model.aperture_max() {
                return Err(StationError::Config(format!(
                    "scenario gripper aperture_max {aperture_max} differs from robot {}",
                    model.aperture_max()
                )));
            }
        }
        let rate = self.tick_rate_hz()?;
        if self.telemetry_hz == 0 || self.telemetry_hz > rate {
            return Err(StationError::Config(format!(
                "telemetry_hz must be in 1..={rate}, got {}",
                self.telemetry_hz
            )));
        }
        if !self
            .right_wrist_rest
            .iter()
            .chain(&self.left_wrist_rest)
            .all(|v| v.is_finite())
        {
            return Err(StationError::Config(
                "wrist rest poses must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<RobotModel, StationError> {
        Ok(RobotModel::try_from(&self.robot)?)
    }

    /// Control rate; the profile period must be a whole number of
    /// microseconds dividing one second.
    pub fn tick_rate_hz(&self) -> Result<u32, StationError> {
        let period_us = (self.profile.dt * 1e6).round() as i64;
        if period_us <= 0
            || 1_000_000 % period_us != 0
            || (period_us as f64 / 1e6 - self.profile.dt).abs() > 1e-12
        {
            return Err(StationError::Config(format!(
                "control period {} s must divide one second in whole microseconds",
                self.profile.dt
            )));
        }
        Ok((1_000_000 / period_us) as u32)
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }
}
