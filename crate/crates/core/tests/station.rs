use proptest::prelude::*;
use tpo_core::station::{
    replay, run_headless, Condition, ConfigSnapshot, Script, ScriptButton, ScriptEvent, TrialLog,
    WireMessage,
};

fn random_script() -> impl Strategy<Value = Script> {
    let waypoint = || prop::array::uniform3(-0.15f64..0.15);
    let buttons = prop::sample::select(vec![
        ScriptButton::Right1,
        ScriptButton::Right2,
        ScriptButton::Left1,
        ScriptButton::Left2,
    ]);
    (
        prop::collection::vec((waypoint(), waypoint()), 1..6),
        prop::collection::vec((0.0f64..1.5, buttons), 0..6),
    )
        .prop_map(|(moves, mut presses)| {
            let mut script = Script {
                duration: Some(1.5),
                ..Script::default()
            };
            for (i, (r, l)) in moves.into_iter().enumerate() {
                let t = i as f64 * 0.3;
                script
                    .right_wrist
                    .push([t, 0.3 + r[0], -0.2 + r[1], 1.0 + r[2]]);
                script
                    .left_wrist
                    .push([t, 0.3 + l[0], 0.2 + l[1], 1.0 + l[2]]);
            }
            presses.sort_by(|a, b| a.0.total_cmp(&b.0));
            script.events = presses
                .into_iter()
                .map(|(t, button)| ScriptEvent {
                    t: (t * 100.0).round() / 100.0,
                    button: Some(button),
                    command: None,
                })
                .collect();
            script
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_headless_log_replays_clean(script in random_script(), c in 0usize..3) {
        let condition = [Condition::A, Condition::B, Condition::C][c];
        let config = ConfigSnapshot::shipped(condition);
        let (_, bytes) = run_headless(&config, &script, Vec::new()).unwrap();
        let log = TrialLog::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        let report = replay(&log, None).unwrap();
        prop_assert!(report.is_clean(), "{:?}", report.divergences.first());

        let mut last = None;
        for entry in &log.entries {
            if let Some(t) = entry.message.t() {
                if entry.message.is_output() {
                    prop_assert!(last.is_none_or(|l| t >= l));
                    last = Some(t);
                }
            }
        }
    }

    #[test]
    fn condition_a_ignores_buttons(script in random_script()) {
        let config = ConfigSnapshot::shipped(Condition::A);
        let (_, bytes) = run_headless(&config, &script, Vec::new()).unwrap();
        let log = TrialLog::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        for entry in log.outputs() {
            if let WireMessage::RobotState(s) = &entry.message {
                prop_assert!(!s.right_active && !s.left_active);
            }
        }
    }
}

#[test]
fn external_tokens_drive_condition_a() {
    let script = Script::parse(
        r#"{"duration":1.0,"right_wrist":[[0.0,0.3,-0.2,1.0],[0.8,0.4,-0.2,1.0]],
            "events":[{"t":0.1,"command":"RIGHT"},{"t":0.3,"command":"gripper"}]}"#,
    )
    .unwrap();
    for (condition, expect_active) in [
        (Condition::A, true),
        (Condition::B, false),
        (Condition::C, false),
    ] {
        let (_, bytes) =
            run_headless(&ConfigSnapshot::shipped(condition), &script, Vec::new()).unwrap();
        let log = TrialLog::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        let last = log
            .outputs()
            .filter_map(|e| match &e.message {
                WireMessage::RobotState(s) => Some(s.right_active),
                _ => None,
            })
            .last()
            .unwrap();
        assert_eq!(last, expect_active, "condition {condition}");
    }
}
