//! Authors `scripts/paper_mission_demo.json` by flying the shipped mission
//! closed-loop: every 100 ms a simple operator model looks at the robot and
//! places the next wrist waypoint, and the stack is advanced through exactly
//! the input stream the frozen script will later produce.
//!
//! cargo run -p tpo-core --example author_demo -- scripts/paper_mission_demo.json

use nalgebra::Vector3;
use tpo_core::robot::ArmSide;
use tpo_core::scenario::{BottleHold, Phase, Role};
use tpo_core::station::{
    scripted_operator, Condition, ConfigSnapshot, Script, ScriptButton, ScriptEvent, Stack,
};
use tpo_core::time::Timestamp;

const ARM_GAIN: f64 = 25.0;
const ARM_FORCE_MAX: f64 = 3.0;
const BASE_GAIN: f64 = 12.0;
const BASE_FORCE_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Goal {
    Activate,
    AboveBottle,
    AtBottle,
    Close,
    Lift,
    ActivateLeft,
    RopeToBase,
    Drive(usize),
    ReleaseRope,
    RopeToArm,
    OverBox,
    Open,
    AboveButton,
    Press,
}

const BASE_WAYPOINTS: [[f64; 2]; 3] = [[-0.7, 0.0], [-0.7, -1.75], [0.0, -1.75]];

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Wrist position that pulls its rope with `force`.
fn wrist_for(anchor: Vector3<f64>, force: Vector3<f64>, gain: f64, deadzone: f64) -> [f64; 3] {
    let n = force.norm();
    let w = if n < 1e-9 {
        anchor
    } else {
        anchor + force / n * (deadzone + n / gain)
    };
    [round4(w.x), round4(w.y), round4(w.z)]
}

fn pull(err: Vector3<f64>, gain: f64, max: f64) -> Vector3<f64> {
    let f = err * gain;
    if f.norm() > max {
        f * (max / f.norm())
    } else {
        f
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// Pretty JSON with one waypoint or event per line.
fn render(script: &Script) -> String {
    let rows = |items: Vec<String>| format!("[\n    {}\n  ]", items.join(",\n    "));
    let track = |t: &[[f64; 4]]| rows(t.iter().map(json).collect());
    format!(
        "{{\n  \"input_rate_hz\": {},\n  \"duration\": {},\n  \"right_wrist\": {},\n  \"left_wrist\": {},\n  \"events\": {}\n}}\n",
        script.input_rate_hz,
        json(&script.duration.expect("set on completion")),
        track(&script.right_wrist),
        track(&script.left_wrist),
        rows(script.events.iter().map(json).collect()),
    )
}

fn object(stack: &Stack, role: Role) -> Vector3<f64> {
    let o = stack
        .world()
        .objects()
        .iter()
        .find(|o| o.role == role)
        .expect("object present");
    o.pose.position()
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "scripts/paper_mission_demo.json".into());
    let config = ConfigSnapshot::shipped(Condition::C);
    let rope = config.profile.rope().expect("valid profile");
    let rest = (config.right_wrist_rest, config.left_wrist_rest);
    let mut stack = Stack::new(&config).expect("valid config");
    let mut script = Script {
        right_wrist: vec![[0.0, rest.0[0], rest.0[1], rest.0[2]]],
        left_wrist: vec![[0.0, rest.1[0], rest.1[1], rest.1[2]]],
        ..Script::default()
    };
    let mut goal = Goal::Activate;
    let mut goal_since = 0.0;
    let mut hold_right: Option<Vector3<f64>> = None;
    let mut grasp_offset = Vector3::zeros();

    for i in 0..3000 {
        let now = i as f64 / 10.0;
        let next = (i + 1) as f64 / 10.0;
        let (right_ee, left_ee) = stack.end_effectors();
        let base = stack.base().position();
        let mut press = None;
        let mut right_force = Vector3::zeros();
        let mut left_force = Vector3::zeros();
        let elapsed = now - goal_since;
        let advance;

        match goal {
            Goal::Activate => {
                press = Some(ScriptButton::Right1);
                advance = true;
            }
            Goal::AboveBottle | Goal::AtBottle => {
                let lift = if goal == Goal::AboveBottle { 0.1 } else { 0.0 };
                let target = object(&stack, Role::Bottle) + Vector3::new(0.0, 0.0, lift);
                let err = target - right_ee;
                right_force = pull(err, ARM_GAIN, ARM_FORCE_MAX);
                advance = err.norm() < 0.003 && elapsed > 0.5;
            }
            Goal::Close => {
                if elapsed == 0.0 {
                    press = Some(ScriptButton::Right2);
                }
                advance = matches!(stack.world().bottle_hold(), BottleHold::Grasped { .. });
                if advance {
                    grasp_offset = object(&stack, Role::Bottle) - right_ee;
                }
            }
            Goal::Lift => {
                let target = *hold_right.get_or_insert(right_ee + Vector3::new(0.0, 0.0, 0.12));
                let err = target - right_ee;
                right_force = pull(err, ARM_GAIN, ARM_FORCE_MAX);
                advance = stack.mission().phase == Phase::PlaceInBox && err.norm() < 0.003;
            }
            Goal::ActivateLeft => {
                press = Some(ScriptButton::Left1);
                advance = true;
            }
            Goal::RopeToBase | Goal::RopeToArm => {
                if elapsed == 0.0 {
                    press = Some(ScriptButton::Left2);
                }
                advance = elapsed >= 0.3;
            }
            Goal::Drive(k) => {
                let [x, y] = BASE_WAYPOINTS[k];
                let err = Vector3::new(x - base.x, y - base.y, 0.0);
                left_force = pull(err, BASE_GAIN, BASE_FORCE_MAX);
                let tol = if k + 1 == BASE_WAYPOINTS.len() {
                    0.003
                } else {
                    0.02
                };
                advance = err.norm() < tol;
            }
            Goal::ReleaseRope => advance = elapsed >= 0.3,
            Goal::OverBox => {
                let box_center = object(&stack, Role::Box);
                let target =
                    Vector3::new(box_center.x, box_center.y, box_center.z + 0.2) - grasp_offset;
                let err = target - right_ee;
                right_force = pull(err, ARM_GAIN, ARM_FORCE_MAX);
                advance = err.norm() < 0.003;
            }
            Goal::Open => {
                if elapsed == 0.0 {
                    press = Some(ScriptButton::Right2);
                }
                advance = stack.mission().phase == Phase::PressButton;
            }
            Goal::AboveButton | Goal::Press => {
                let button = object(&stack, Role::EmergencyButton);
                let dz = if goal == Goal::AboveButton {
                    0.15
                } else {
                    0.04 + 0.03 - 0.01
                };
                let err = button + Vector3::new(0.0, 0.0, dz) - left_ee;
                left_force = pull(err, ARM_GAIN, ARM_FORCE_MAX);
                advance = goal == Goal::AboveButton && err.norm() < 0.005;
            }
        }

        if stack.mission().is_done() {
            script.duration = Some(round4(now + 1.0));
            break;
        }
        if elapsed > 30.0 {
            panic!("stuck at {goal:?} since {goal_since:.1} s: right {right_ee:?} left {left_ee:?} base {base:?}");
        }

        let right = wrist_for(
            stack.anchor(ArmSide::Right),
            right_force,
            rope.gain,
            rope.deadzone,
        );
        let left = wrist_for(
            stack.anchor(ArmSide::Left),
            left_force,
            rope.gain,
            rope.deadzone,
        );
        script
            .right_wrist
            .push([next, right[0], right[1], right[2]]);
        script.left_wrist.push([next, left[0], left[1], left[2]]);
        if let Some(button) = press {
            script.events.push(ScriptEvent {
                t: round4(now + 0.01),
                button: Some(button),
                command: None,
            });
        }

        // Only the newest segment matters for samples in (now, next].
        let tail = |track: &[[f64; 4]]| track[track.len() - 2..].to_vec();
        let block = Script {
            right_wrist: tail(&script.right_wrist),
            left_wrist: tail(&script.left_wrist),
            events: script
                .events
                .iter()
                .filter(|e| e.t > now)
                .cloned()
                .collect(),
            ..Script::default()
        };
        let from = Timestamp::from_secs(now);
        for m in scripted_operator(&block, rest).expect("valid script") {
            if m.t().is_some_and(|t| t > from) {
                stack.push_input(m).expect("ordered inputs");
            }
        }
        while stack.now() <= Timestamp::from_secs(next) {
            stack.step().expect("stack tick");
        }

        if advance {
            goal = match goal {
                Goal::Activate => Goal::AboveBottle,
                Goal::AboveBottle => Goal::AtBottle,
                Goal::AtBottle => Goal::Close,
                Goal::Close => Goal::Lift,
                Goal::Lift => Goal::ActivateLeft,
                Goal::ActivateLeft => Goal::RopeToBase,
                Goal::RopeToBase => Goal::Drive(0),
                Goal::Drive(k) if k + 1 < BASE_WAYPOINTS.len() => Goal::Drive(k + 1),
                Goal::Drive(_) => Goal::ReleaseRope,
                Goal::ReleaseRope => Goal::RopeToArm,
                Goal::RopeToArm => Goal::OverBox,
                Goal::OverBox => Goal::Open,
                Goal::Open => Goal::AboveButton,
                Goal::AboveButton => Goal::Press,
                Goal::Press => Goal::Press,
            };
            goal_since = next;
            eprintln!("{next:6.1} s  -> {goal:?}");
        }
    }

    assert!(stack.mission().is_done(), "mission not finished");
    let report = stack.report().expect("trial started");
    assert_eq!(report.failure_count, 0, "{report:?}");
    eprintln!("completion {:.2} s", report.completion_time);
    std::fs::write(&out, render(&script)).expect("write script");
}
