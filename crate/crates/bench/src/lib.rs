//! Shared fixtures for the benchmarks.

use tpo_core::station::{scripted_operator, Condition, ConfigSnapshot, Script, Stack, WireMessage};

/// A stack on the shipped configuration with the right rope engaged and
/// pulled 10 cm forward.
pub fn engaged_stack() -> Stack {
    let config = ConfigSnapshot::shipped(Condition::C);
    let mut stack = Stack::new(&config).expect("shipped config");
    let script = Script::parse(
        r#"{"right_wrist":[[0.0,0.3,-0.2,1.0],[0.5,0.4,-0.2,1.0]],"events":[{"t":0.0,"button":"right1"}]}"#,
    )
    .expect("valid script");
    let rest = (config.right_wrist_rest, config.left_wrist_rest);
    for m in scripted_operator(&script, rest).expect("valid script") {
        stack.push_input(m).expect("ordered");
    }
    for _ in 0..60 {
        stack.step().expect("tick");
    }
    stack
}

/// One telemetry frame from a running stack.
pub fn sample_state() -> WireMessage {
    let stack = engaged_stack();
    WireMessage::RobotState(Box::new(stack.state_frame(stack.now())))
}
