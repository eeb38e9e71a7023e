use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::world::WorldEvents;
use super::ScenarioError;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    PickBottle,
    PlaceInBox,
    PressButton,
    Done,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::PickBottle,
        Phase::PlaceInBox,
        Phase::PressButton,
        Phase::Done,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Failure {
    BottleDropped,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", content = "value")]
pub enum MissionEventKind {
    Started,
    PhaseEntered(Phase),
    Failure(Failure),
    /// The gripper lost the bottle away from the box and it was put back.
    BottleRespawned,
    Done,
}

/// Everything that happened in the world during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MissionInput {
    /// Some arm went from inactive to active this tick.
    pub activation: bool,
    pub world: WorldEvents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionState {
    pub phase: Phase,
    pub failures: BTreeSet<Failure>,
    pub t_start: Option<Timestamp>,
    pub t_end: Option<Timestamp>,
    phase_entered: BTreeMap<Phase, Timestamp>,
    last_t: Option<Timestamp>,
    in_collision: bool,
}

impl Default for MissionState {
    fn default() -> Self {
        Self::new()
    }
}

impl MissionState {
    pub fn new() -> Self {
        Self {
            phase: Phase::PickBottle,
            failures: BTreeSet::new(),
            t_start: None,
            t_end: None,
            phase_entered: BTreeMap::new(),
            last_t: None,
            in_collision: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn phase_entered(&self, phase: Phase) -> Option<Timestamp> {
        self.phase_entered.get(&phase).copied()
    }

    /// Replays one recorded event into the bookkeeping, e.g. when rebuilding
    /// a mission from a trial log.
    pub fn record(&mut self, kind: MissionEventKind, t: Timestamp) {
        match kind {
            MissionEventKind::Started => {
                self.t_start = Some(t);
                self.phase_entered.insert(Phase::PickBottle, t);
            }
            MissionEventKind::PhaseEntered(phase) => {
                self.phase = self.phase.max(phase);
                self.phase_entered.insert(phase, t);
            }
            MissionEventKind::Failure(failure) => {
                self.failures.insert(failure);
            }
            MissionEventKind::BottleRespawned => {}
            MissionEventKind::Done => self.t_end = Some(t),
        }
        self.last_t = Some(t);
    }

    fn enter(&mut self, phase: Phase, t: Timestamp, events: &mut Vec<MissionEventKind>) {
        self.phase = phase;
        self.phase_entered.insert(phase, t);
        events.push(MissionEventKind::PhaseEntered(phase));
    }

    fn fail(&mut self, failure: Failure, events: &mut Vec<MissionEventKind>) {
        self.failures.insert(failure);
        events.push(MissionEventKind::Failure(failure));
    }
}

/// Advances the mission by one tick. Returns what happened, in order. The
/// caller respawns the bottle when `BottleRespawned` is reported.
pub fn mission_update(
    mission: &mut MissionState,
    input: &MissionInput,
    t: Timestamp,
) -> Result<Vec<MissionEventKind>, ScenarioError> {
    if let Some(last) = mission.last_t {
        if t < last {
            return Err(ScenarioError::TimeRegression { last, got: t });
        }
    }
    mission.last_t = Some(t);
    let mut events = Vec::new();
    if mission.is_done() {
        return Ok(events);
    }
    if mission.t_start.is_none() {
        if !input.activation {
            return Ok(events);
        }
        mission.t_start = Some(t);
        mission.phase_entered.insert(Phase::PickBottle, t);
        events.push(MissionEventKind::Started);
    }

    let w = &input.world;
    if w.collision && !mission.in_collision {
        mission.fail(Failure::Collision, &mut events);
    }
    mission.in_collision = w.collision;

    match mission.phase {
        Phase::PickBottle if w.bottle_lifted => mission.enter(Phase::PlaceInBox, t, &mut events),
        Phase::PlaceInBox => match w.released {
            Some(true) => mission.enter(Phase::PressButton, t, &mut events),
            Some(false) => {
                mission.fail(Failure::BottleDropped, &mut events);
                events.push(MissionEventKind::BottleRespawned);
            }
            None => {}
        },
        Phase::PressButton if w.button_pressed => {
            mission.enter(Phase::Done, t, &mut events);
            mission.t_end = Some(t);
            events.push(MissionEventKind::Done);
        }
        _ => {}
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialReport {
    pub completed: bool,
    /// Seconds from first activation to the button press (or to the end of
    /// the log for an aborted trial).
    pub completion_time: f64,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    pub phase_durations: BTreeMap<Phase, f64>,
}

/// Summarises a finished or aborted trial; `t_last` closes an aborted one.
pub fn trial_report(
    mission: &MissionState,
    t_last: Timestamp,
) -> Result<TrialReport, ScenarioError> {
    let start = mission.t_start.ok_or(ScenarioError::NotStarted)?;
    let end = mission.t_end.unwrap_or(t_last.max(start));
    let mut phase_durations = BTreeMap::new();
    let reached: Vec<(Phase, Timestamp)> = Phase::ALL
        .iter()
        .filter(|p| **p != Phase::Done)
        .filter_map(|p| mission.phase_entered(*p).map(|t| (*p, t)))
        .collect();
    for (i, (phase, entered)) in reached.iter().enumerate() {
        let left = reached.get(i + 1).map_or(end, |next| next.1);
        phase_durations.insert(*phase, (left - *entered).secs());
    }
    Ok(TrialReport {
        completed: mission.is_done(),
        completion_time: (end - start).secs(),
        failure_count: mission.failures.len(),
        failures: mission.failures.iter().copied().collect(),
        phase_durations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: f64) -> Timestamp {
        Timestamp::from_secs(s)
    }

    fn world(f: impl FnOnce(&mut WorldEvents)) -> MissionInput {
        let mut w = WorldEvents::default();
        f(&mut w);
        MissionInput {
            activation: false,
            world: w,
        }
    }

    #[test]
    fn clock_starts_at_first_activation() {
        let mut m = MissionState::new();
        assert!(
            mission_update(&mut m, &world(|w| w.bottle_lifted = true), secs(1.0))
                .unwrap()
                .is_empty()
        );
        assert_eq!(m.phase, Phase::PickBottle);
        let ev = mission_update(
            &mut m,
            &MissionInput {
                activation: true,
                ..MissionInput::default()
            },
            secs(2.0),
        )
        .unwrap();
        assert_eq!(ev, vec![MissionEventKind::Started]);
        assert_eq!(m.t_start, Some(secs(2.0)));
    }

    fn started() -> MissionState {
        let mut m = MissionState::new();
        let go = MissionInput {
            activation: true,
            ..MissionInput::default()
        };
        mission_update(&mut m, &go, secs(2.0)).unwrap();
        m
    }

    #[test]
    fn full_mission_and_report() {
        let mut m = started();
        mission_update(&mut m, &world(|w| w.bottle_lifted = true), secs(20.0)).unwrap();
        assert_eq!(m.phase, Phase::PlaceInBox);
        mission_update(&mut m, &world(|w| w.released = Some(true)), secs(100.0)).unwrap();
        assert_eq!(m.phase, Phase::PressButton);
        let ev = mission_update(&mut m, &world(|w| w.button_pressed = true), secs(150.2)).unwrap();
        assert_eq!(ev.last(), Some(&MissionEventKind::Done));
        let r = trial_report(&m, secs(160.0)).unwrap();
        assert!(r.completed);
        assert!((r.completion_time - 148.2).abs() < 1e-9);
        assert_eq!(r.failure_count, 0);
        assert_eq!(r.phase_durations[&Phase::PickBottle], 18.0);
        assert_eq!(r.phase_durations[&Phase::PlaceInBox], 80.0);
        assert!((r.phase_durations[&Phase::PressButton] - 50.2).abs() < 1e-9);
        // nothing happens after the end
        assert!(
            mission_update(&mut m, &world(|w| w.collision = true), secs(170.0))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn drop_in_transport_respawns() {
        let mut m = started();
        mission_update(&mut m, &world(|w| w.bottle_lifted = true), secs(3.0)).unwrap();
        let ev = mission_update(&mut m, &world(|w| w.released = Some(false)), secs(4.0)).unwrap();
        assert_eq!(
            ev,
            vec![
                MissionEventKind::Failure(Failure::BottleDropped),
                MissionEventKind::BottleRespawned
            ]
        );
        assert_eq!(m.phase, Phase::PlaceInBox);
        assert_eq!(trial_report(&m, secs(5.0)).unwrap().failure_count, 1);
    }

    #[test]
    fn collision_counted_once() {
        let mut m = started();
        for k in 0..5 {
            mission_update(
                &mut m,
                &world(|w| w.collision = true),
                secs(3.0 + f64::from(k)),
            )
            .unwrap();
        }
        let r = trial_report(&m, secs(10.0)).unwrap();
        assert_eq!(r.failure_count, 1);
        assert_eq!(r.failures, vec![Failure::Collision]);
        assert!(!r.completed);
    }

    #[test]
    fn rebuilt_from_events() {
        let mut live = started();
        let mut events = vec![(MissionEventKind::Started, secs(2.0))];
        let steps = [
            (world(|w| w.bottle_lifted = true), 5.0),
            (world(|w| w.collision = true), 6.0),
            (world(|w| w.released = Some(true)), 9.0),
            (world(|w| w.button_pressed = true), 12.5),
        ];
        for (input, t) in steps {
            for kind in mission_update(&mut live, &input, secs(t)).unwrap() {
                events.push((kind, secs(t)));
            }
        }
        let mut rebuilt = MissionState::new();
        for (kind, t) in events {
            rebuilt.record(kind, t);
        }
        assert_eq!(
            trial_report(&rebuilt, secs(20.0)).unwrap(),
            trial_report(&live, secs(20.0)).unwrap()
        );
    }

    #[test]
    fn unstarted_report_is_error() {
        assert!(matches!(
            trial_report(&MissionState::new(), secs(1.0)),
            Err(ScenarioError::NotStarted)
        ));
    }

    #[test]
    fn time_must_not_go_back() {
        let mut m = started();
        assert!(mission_update(&mut m, &MissionInput::default(), secs(1.0)).is_err());
    }
}
