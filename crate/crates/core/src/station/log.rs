//! JSON-lines trial logs: the config snapshot on the first line, then every
//! consumed input and produced output frame in processing order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ConfigSnapshot;
use super::protocol::{decode_message, encode_line, WireMessage};
use super::script::{scripted_operator, Script};
use super::stack::{Stack, TickRecord};
use super::StationError;
use crate::scenario::{trial_report, MissionState, TrialReport};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub message: WireMessage,
    /// The line exactly as stored.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub config: ConfigSnapshot,
    pub entries: Vec<LogEntry>,
}

impl TrialLog {
    pub fn parse(text: &str) -> Result<Self, StationError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(StationError::CorruptLog {
            line: 1,
            reason: "empty log".into(),
        })?;
        let config: ConfigSnapshot =
            serde_json::from_str(head).map_err(|e| StationError::CorruptLog {
                line: 1,
                reason: format!("config snapshot: {e}"),
            })?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let message =
                decode_message(line.as_bytes()).map_err(|e| StationError::CorruptLog {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            entries.push(LogEntry {
                message,
                raw: line.to_owned(),
            });
        }
        Ok(Self { config, entries })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, StationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StationError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &WireMessage> {
        self.entries
            .iter()
            .map(|e| &e.message)
            .filter(|m| m.is_input())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.message.is_output())
    }

    /// Latest timestamp anywhere in the log.
    pub fn last_t(&self) -> Timestamp {
        self.entries
            .iter()
            .filter_map(|e| e.message.t())
            .max()
            .unwrap_or(Timestamp::ZERO)
    }
}

/// Streams a trial log to any writer.
pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, config: &ConfigSnapshot) -> Result<Self, StationError> {
        let head = serde_json::to_string(config).map_err(|e| StationError::Io(e.to_string()))?;
        writeln!(out, "{head}").map_err(io)?;
        Ok(Self { out })
    }

    pub fn append(&mut self, message: &WireMessage) -> Result<(), StationError> {
        writeln!(self.out, "{}", encode_line(message)?).map_err(io)
    }

    pub fn append_tick(&mut self, record: &TickRecord) -> Result<(), StationError> {
        for m in record.inputs.iter().chain(&record.outputs) {
            self.append(m)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StationError> {
        self.out.flush().map_err(io)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn io(e: std::io::Error) -> StationError {
    StationError::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlessSummary {
    pub ticks: u64,
    pub sim_time: f64,
    pub report: Option<TrialReport>,
}

/// Runs a script through the stack as fast as possible, logging everything.
/// Stops at the script's run length or right after the mission completes.
pub fn run_headless<W: Write>(
    config: &ConfigSnapshot,
    script: &Script,
    out: W,
) -> Result<(HeadlessSummary, W), StationError> {
    let mut stack = Stack::new(config)?;
    let rest = (config.right_wrist_rest, config.left_wrist_rest);
    for message in scripted_operator(script, rest)? {
        stack.push_input(message)?;
    }
    let mut log = LogWriter::new(out, config)?;
    let end = Timestamp::from_secs(script.run_length());
    let mut ticks = 0;
    while stack.now() <= end {
        let record = stack.step()?;
        log.append_tick(&record)?;
        ticks += 1;
        if stack.mission().is_done() {
            break;
        }
    }
    log.flush()?;
    let summary = HeadlessSummary {
        ticks,
        sim_time: (stack.now() - stack.period()).secs(),
        report: stack.report().ok(),
    };
    Ok((summary, log.into_inner()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Position among the output frames.
    pub index: usize,
    pub t: Option<Timestamp>,
    pub logged: Option<String>,
    pub replayed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub config_mismatch: bool,
    pub outputs_compared: usize,
    pub divergences: Vec<Divergence>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        !self.config_mismatch && self.divergences.is_empty()
    }
}

/// Re-runs the logged inputs through a fresh stack (built from `config`, or
/// from the log's own snapshot) and compares every output frame byte for
/// byte.
pub fn replay(
    log: &TrialLog,
    config: Option<&ConfigSnapshot>,
) -> Result<ReplayReport, StationError> {
    let config = config.unwrap_or(&log.config);
    let mut stack = Stack::new(config)?;
    for m in log.inputs() {
        stack.push_input(m.clone())?;
    }
    let end = log.last_t();
    let mut replayed = Vec::new();
    while stack.now() <= end {
        for m in stack.step()?.outputs {
            replayed.push(encode_line(&m)?);
        }
    }
    let logged: Vec<&LogEntry> = log.outputs().collect();
    let mut divergences = Vec::new();
    for index in 0..logged.len().max(replayed.len()) {
        let a = logged.get(index);
        let b = replayed.get(index);
        if a.map(|e| &e.raw) != b {
            divergences.push(Divergence {
                index,
                t: a.and_then(|e| e.message.t())
                    .or_else(|| b.and_then(|s| decode_message(s.as_bytes()).ok()?.t())),
                logged: a.map(|e| e.raw.clone()),
                replayed: b.cloned(),
            });
        }
    }
    Ok(ReplayReport {
        config_mismatch: *config != log.config,
        outputs_compared: logged.len(),
        divergences,
    })
}

/// Trial summary rebuilt from the mission events recorded in a log.
pub fn report_from_log(log: &TrialLog) -> Result<TrialReport, StationError> {
    let mut mission = MissionState::new();
    for entry in &log.entries {
        if let WireMessage::MissionEvent { t, kind } = entry.message {
            mission.record(kind, t);
        }
    }
    Ok(trial_report(&mission, log.last_t())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::station::Condition;

    fn short_script() -> Script {
        Script::parse(
            r#"{"duration":1.5,
                "right_wrist":[[0.0,0.3,-0.2,1.0],[0.2,0.3,-0.2,1.0],[1.0,0.36,-0.2,0.95]],
                "events":[{"t":0.1,"button":"right1"},{"t":0.5,"button":"right2"}]}"#,
        )
        .unwrap()
    }

    fn produce() -> (String, HeadlessSummary) {
        let (summary, bytes) = run_headless(
            &ConfigSnapshot::shipped(Condition::C),
            &short_script(),
            Vec::new(),
        )
        .unwrap();
        (String::from_utf8(bytes).unwrap(), summary)
    }

    #[test]
    fn fresh_log_replays_clean() {
        let (text, summary) = produce();
        assert_eq!(summary.ticks, 151);
        let log = TrialLog::parse(&text).unwrap();
        let report = replay(&log, None).unwrap();
        assert!(report.is_clean(), "{report:?}");
        assert!(report.outputs_compared > 90);
        assert_eq!(produce().0, text);
    }

    #[test]
    fn tampered_frame_is_reported() {
        let (text, _) = produce();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        let idx = lines
            .iter()
            .position(|l| l.contains("\"RobotState\"") && l.contains("\"t\":0.5"))
            .unwrap();
        lines[idx] = lines[idx].replacen("\"gripper_aperture\":", "\"gripper_aperture\":1", 1);
        let log = TrialLog::parse(&(lines.join("\n") + "\n")).unwrap();
        let report = replay(&log, None).unwrap();
        assert_eq!(report.divergences.len(), 1);
        assert_eq!(report.divergences[0].t, Some(Timestamp::from_secs(0.5)));
        assert!(!report.config_mismatch);
    }

    #[test]
    fn different_profile_is_flagged() {
        let (text, _) = produce();
        let log = TrialLog::parse(&text).unwrap();
        let mut other = log.config.clone();
        other.profile.damping = vec![8.0; 6];
        let report = replay(&log, Some(&other)).unwrap();
        assert!(report.config_mismatch);
        assert!(!report.divergences.is_empty());
    }

    #[test]
    fn corrupt_logs() {
        assert!(matches!(
            TrialLog::parse(""),
            Err(StationError::CorruptLog { .. })
        ));
        assert!(matches!(
            TrialLog::parse("{}\n"),
            Err(StationError::CorruptLog { line: 1, .. })
        ));
        let (text, _) = produce();
        let broken = text.replacen("\"type\":\"OperatorInput\"", "\"type\":\"Operator\"", 1);
        assert!(matches!(
            TrialLog::parse(&broken),
            Err(StationError::CorruptLog { line: 2, .. })
        ));
    }

    #[test]
    fn unstarted_trial_has_no_report() {
        let script =
            Script::parse(r#"{"duration":0.2,"right_wrist":[[0.0,0.3,-0.2,1.0]]}"#).unwrap();
        let (summary, bytes) =
            run_headless(&ConfigSnapshot::shipped(Condition::C), &script, Vec::new()).unwrap();
        assert!(summary.report.is_none());
        let log = TrialLog::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert!(report_from_log(&log).is_err());
    }
}
