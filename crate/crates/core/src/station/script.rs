//! Timed operator scripts: wrist waypoints plus button presses and keyboard
//! commands, expanded into the same input stream a live station sends.

use serde::{Deserialize, Serialize};

use super::protocol::{ButtonPress, WireMessage};
use super::StationError;
use crate::command::ButtonIndex;
use crate::robot::ArmSide;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptButton {
    Right1,
    Right2,
    Left1,
    Left2,
}

impl ScriptButton {
    pub fn press(self) -> ButtonPress {
        let (side, button) = match self {
            ScriptButton::Right1 => (ArmSide::Right, ButtonIndex::Button1),
            ScriptButton::Right2 => (ArmSide::Right, ButtonIndex::Button2),
            ScriptButton::Left1 => (ArmSide::Left, ButtonIndex::Button1),
            ScriptButton::Left2 => (ArmSide::Left, ButtonIndex::Button2),
        };
        ButtonPress { side, button }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEvent {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub button: Option<ScriptButton>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

fn default_rate() -> u32 {
    100
}

/// Wrist tracks are `[t, x, y, z]` waypoints, linearly interpolated and held
/// before the first and after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default = "default_rate")]
    pub input_rate_hz: u32,
    /// Simulated run length, s; defaults to one second past the last entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub right_wrist: Vec<[f64; 4]>,
    #[serde(default)]
    pub left_wrist: Vec<[f64; 4]>,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
}

impl Default for Script {
    fn default() -> Self {
        Self {
            input_rate_hz: default_rate(),
            duration: None,
            right_wrist: Vec::new(),
            left_wrist: Vec::new(),
            events: Vec::new(),
        }
    }
}

fn interpolate(track: &[[f64; 4]], t: f64, rest: [f64; 3]) -> [f64; 3] {
    let Some(first) = track.first() else {
        return rest;
    };
    if t <= first[0] {
        return [first[1], first[2], first[3]];
    }
    for pair in track.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if t <= b[0] {
            let s = (t - a[0]) / (b[0] - a[0]);
            return [1, 2, 3].map(|i| a[i] + (b[i] - a[i]) * s);
        }
    }
    let last = track[track.len() - 1];
    [last[1], last[2], last[3]]
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, StationError> {
        let script: Script =
            serde_json::from_str(text).map_err(|e| StationError::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), StationError> {
        let bad = |msg: String| Err(StationError::Script(msg));
        if self.input_rate_hz == 0 || 1_000_000 % self.input_rate_hz != 0 {
            return bad(format!(
                "input_rate_hz {} must divide 1 MHz",
                self.input_rate_hz
            ));
        }
        for (name, track) in [
            ("right_wrist", &self.right_wrist),
            ("left_wrist", &self.left_wrist),
        ] {
            if !track.iter().flatten().all(|v| v.is_finite()) {
                return bad(format!("{name}: non-finite waypoint"));
            }
            if track.first().is_some_and(|w| w[0] < 0.0)
                || track.windows(2).any(|p| p[1][0] <= p[0][0])
            {
                return bad(format!(
                    "{name}: waypoint times must be >= 0 and strictly increasing"
                ));
            }
        }
        for e in &self.events {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return bad(format!("event time {} must be >= 0", e.t));
            }
            if e.button.is_some() == e.command.is_some() {
                return bad(format!(
                    "event at {} needs exactly one of `button` or `command`",
                    e.t
                ));
            }
        }
        if self.events.windows(2).any(|p| p[1].t < p[0].t) {
            return bad("events must be in time order".into());
        }
        if self.duration.is_some_and(|d| !(d.is_finite() && d > 0.0)) {
            return bad("duration must be > 0".into());
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.right_wrist.is_empty() && self.left_wrist.is_empty() && self.events.is_empty()
    }

    /// Time of the last waypoint or event, s.
    pub fn last_entry(&self) -> f64 {
        let last = |track: &[[f64; 4]]| track.last().map_or(0.0, |w| w[0]);
        let events = self.events.last().map_or(0.0, |e| e.t);
        last(&self.right_wrist)
            .max(last(&self.left_wrist))
            .max(events)
    }

    pub fn run_length(&self) -> f64 {
        self.duration.unwrap_or(self.last_entry() + 1.0)
    }

    pub fn sample_period(&self) -> Timestamp {
        Timestamp::from_micros(1_000_000 / i64::from(self.input_rate_hz))
    }

    /// Wrist positions at `t`.
    pub fn wrists_at(&self, t: Timestamp, rest: ([f64; 3], [f64; 3])) -> ([f64; 3], [f64; 3]) {
        let s = t.secs();
        (
            interpolate(&self.right_wrist, s, rest.0),
            interpolate(&self.left_wrist, s, rest.1),
        )
    }
}

/// Expands a script into time-ordered operator messages: one `OperatorInput`
/// per sample period carrying the wrist poses and any button press due since
/// the previous sample, and one `ExternalCommand` per keyboard event.
pub fn scripted_operator(
    script: &Script,
    rest: ([f64; 3], [f64; 3]),
) -> Result<Vec<WireMessage>, StationError> {
    script.validate()?;
    if script.is_empty() {
        return Ok(Vec::new());
    }
    let period = script.sample_period();
    let end = Timestamp::from_secs(script.last_entry());
    let mut out = Vec::new();
    let mut events = script.events.iter().peekable();
    let mut k = 0i64;
    loop {
        let t = Timestamp::from_micros(k * period.micros());
        let mut buttons = Vec::new();
        let mut commands = Vec::new();
        while let Some(e) = events.next_if(|e| Timestamp::from_secs(e.t) <= t) {
            match (&e.button, &e.command) {
                (Some(b), _) => buttons.push(b.press()),
                (None, Some(token)) => commands.push(WireMessage::ExternalCommand {
                    t: Timestamp::from_secs(e.t),
                    token: token.clone(),
                }),
                (None, None) => unreachable!("validated"),
            }
        }
        out.extend(commands);
        let (right, left) = script.wrists_at(t, rest);
        out.push(WireMessage::OperatorInput {
            t,
            right_wrist: right,
            left_wrist: left,
            buttons,
        });
        if t >= end {
            break;
        }
        k += 1;
    }
    Ok(out)
}
