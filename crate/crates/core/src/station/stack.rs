//! The deterministic controller stack: operator inputs in, telemetry,
//! feedback and mission events out, one fixed-period tick at a time.

use std::collections::VecDeque;

use nalgebra::{DVector, Vector3};

use super::config::ConfigSnapshot;
use super::protocol::{ButtonPress, RobotStateFrame, WireMessage};
use super::StationError;
use crate::command::{
    apply_button_event, apply_external_token, on_activation_edges, AckRequest, ButtonEvent,
    CommandState, Debouncer,
};
use crate::control::{ControlInputs, TickOutput, TpoController};
use crate::haptics::{route_feedback, CalibrationProfile, FeedbackSources, HapticChannel};
use crate::robot::{base_to_world, integrate_base, ArmSide, BasePose, GripperState, RobotModel};
use crate::scenario::{
    gripper_step, mission_update, trial_report, ContactReport, MissionEventKind, MissionInput,
    MissionState, RobotPoses, TrialReport, World,
};
use crate::time::Timestamp;

/// Everything one tick consumed and produced, in log order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickRecord {
    pub inputs: Vec<WireMessage>,
    pub outputs: Vec<WireMessage>,
}

#[derive(Debug, Clone)]
pub struct Stack {
    config: ConfigSnapshot,
    model: RobotModel,
    calibration: CalibrationProfile,
    controller: TpoController,
    world: World,
    mission: MissionState,
    commands: CommandState,
    debouncer: Debouncer,
    q_right: DVector<f64>,
    q_left: DVector<f64>,
    base: BasePose,
    base_velocity: Vector3<f64>,
    gripper: GripperState,
    right_wrist: Vector3<f64>,
    left_wrist: Vector3<f64>,
    pending: VecDeque<WireMessage>,
    last_input_t: Option<Timestamp>,
    tick: u64,
    period_us: i64,
    rate_hz: u64,
    last_levels: Option<[f64; 4]>,
    last_tick: Option<TickOutput>,
    contact: ContactReport,
}

impl Stack {
    pub fn new(config: &ConfigSnapshot) -> Result<Self, StationError> {
        config.validate()?;
        let model = config.model()?;
        let (world, mission) = (World::from_doc(&config.scenario)?, MissionState::new());
        let right_wrist = Vector3::from(config.right_wrist_rest);
        let left_wrist = Vector3::from(config.left_wrist_rest);
        let controller = TpoController::new(&config.profile, &model, right_wrist, left_wrist)?;
        let rate_hz = u64::from(config.tick_rate_hz()?);
        Ok(Self {
            q_right: model.right.home.clone(),
            q_left: model.left.home.clone(),
            base: world.start(),
            base_velocity: Vector3::zeros(),
            gripper: GripperState::open(model.aperture_max()),
            calibration: config.calibration.clone(),
            config: config.clone(),
            model,
            controller,
            world,
            mission,
            commands: CommandState::default(),
            debouncer: Debouncer::new(),
            right_wrist,
            left_wrist,
            pending: VecDeque::new(),
            last_input_t: None,
            tick: 0,
            period_us: 1_000_000 / rate_hz as i64,
            rate_hz,
            last_levels: None,
            last_tick: None,
            contact: ContactReport::default(),
        })
    }

    pub fn config(&self) -> &ConfigSnapshot {
        &self.config
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn mission(&self) -> &MissionState {
        &self.mission
    }

    pub fn commands(&self) -> &CommandState {
        &self.commands
    }

    pub fn controller(&self) -> &TpoController {
        &self.controller
    }

    pub fn base(&self) -> BasePose {
        self.base
    }

    pub fn gripper(&self) -> &GripperState {
        &self.gripper
    }

    /// Time of the next tick.
    pub fn now(&self) -> Timestamp {
        Timestamp::from_micros(self.tick as i64 * self.period_us)
    }

    pub fn period(&self) -> Timestamp {
        Timestamp::from_micros(self.period_us)
    }

    /// Queues an operator-side message. Inputs must arrive in time order.
    pub fn push_input(&mut self, message: WireMessage) -> Result<(), StationError> {
        if !message.is_input() {
            return Err(StationError::UnexpectedMessage(format!("{message:?}")));
        }
        let t = message.t().expect("inputs carry a timestamp");
        if let Some(last) = self.last_input_t {
            if t < last {
                return Err(StationError::InputOrder { last, got: t });
            }
        }
        self.last_input_t = Some(t);
        self.pending.push_back(message);
        Ok(())
    }

    pub fn pending_inputs(&self) -> usize {
        self.pending.len()
    }

    /// World-frame end-effector positions.
    pub fn end_effectors(&self) -> (Vector3<f64>, Vector3<f64>) {
        let p = self.base.position();
        (
            base_to_world(&p, self.base.heading, &self.model.right.tip(&self.q_right)),
            base_to_world(&p, self.base.heading, &self.model.left.tip(&self.q_left)),
        )
    }

    fn poses(&self) -> Result<RobotPoses, StationError> {
        let p = self.base.position();
        let world = |pts: Vec<Vector3<f64>>| -> Vec<Vector3<f64>> {
            pts.iter()
                .map(|x| base_to_world(&p, self.base.heading, x))
                .collect()
        };
        Ok(RobotPoses {
            base: self.base,
            footprint: self.model.footprint,
            base_height: self.model.base_height,
            right_points: world(
                self.model
                    .right
                    .chain
                    .joint_points(self.q_right.as_slice())?,
            ),
            left_points: world(self.model.left.chain.joint_points(self.q_left.as_slice())?),
            ball_radius: self.model.ball_radius(),
        })
    }

    fn apply_inputs(
        &mut self,
        now: Timestamp,
        acks: &mut Vec<(AckRequest, Timestamp)>,
    ) -> Result<Vec<WireMessage>, StationError> {
        let mut consumed = Vec::new();
        let condition = self.config.condition;
        while self
            .pending
            .front()
            .is_some_and(|m| m.t().is_some_and(|t| t <= now))
        {
            let message = self.pending.pop_front().expect("front checked");
            match &message {
                WireMessage::OperatorInput {
                    t,
                    right_wrist,
                    left_wrist,
                    buttons,
                } => {
                    self.right_wrist = Vector3::from(*right_wrist);
                    self.left_wrist = Vector3::from(*left_wrist);
                    if condition.buttons_enabled() {
                        for &ButtonPress { side, button } in buttons {
                            let event = ButtonEvent {
                                side,
                                button,
                                t: *t,
                            };
                            if self.debouncer.accept(&event)? {
                                let (next, ack) = apply_button_event(self.commands, &event);
                                self.commands = next;
                                acks.push((ack, now));
                            }
                        }
                    }
                }
                WireMessage::ExternalCommand { token, .. } => {
                    if condition.external_commands_enabled() {
                        // unknown tokens are dropped; the log keeps them
                        if let Ok((next, ack)) = apply_external_token(self.commands, token) {
                            self.commands = next;
                            acks.push((ack, now));
                        }
                    }
                }
                _ => unreachable!("only inputs are queued"),
            }
            consumed.push(message);
        }
        Ok(consumed)
    }

    /// Runs one control tick at `now()`.
    pub fn step(&mut self) -> Result<TickRecord, StationError> {
        let now = self.now();
        let dt = self.controller.dt();
        let before = self.commands;
        let mut acks = Vec::new();
        let inputs = self.apply_inputs(now, &mut acks)?;
        let activation = !on_activation_edges(&before, &self.commands).is_empty();

        let control = ControlInputs {
            right_wrist: self.right_wrist,
            left_wrist: self.left_wrist,
            right_active: self.commands.right_active,
            left_active: self.commands.left_active,
            left_control_point: self.commands.left_control_point,
        };
        let out =
            self.controller
                .control_tick(&self.model, &self.q_right, &self.q_left, &control, dt)?;
        match self.config.profile.tracking_tau {
            None => {
                self.q_right.copy_from(&out.right.q_ref);
                self.q_left.copy_from(&out.left.q_ref);
            }
            Some(tau) => {
                let alpha = -(-dt / tau).exp_m1();
                self.q_right += (&out.right.q_ref - &self.q_right) * alpha;
                self.q_left += (&out.left.q_ref - &self.q_left) * alpha;
            }
        }
        self.base_velocity = out.base_velocity.unwrap_or_else(Vector3::zeros);
        if out.base_velocity.is_some() {
            self.base = integrate_base(&self.base, &self.base_velocity, dt)?;
        }

        let poses = self.poses()?;
        self.gripper.target = self.commands.gripper;
        let width = self.world.object_width_at_jaws(&poses.right_tip());
        self.gripper = gripper_step(&self.gripper, width, &self.world.gripper_params(), dt);
        let (contact, world_events) = self.world.world_step(&poses, &self.gripper);

        let mut outputs = Vec::new();
        let events = mission_update(
            &mut self.mission,
            &MissionInput {
                activation,
                world: world_events,
            },
            now,
        )?;
        for kind in events {
            if kind == MissionEventKind::BottleRespawned {
                self.world.respawn_bottle(&poses.right_tip());
            }
            outputs.push(WireMessage::MissionEvent { t: now, kind });
        }

        let sources = FeedbackSources {
            right_force: out.right_force.magnitude(),
            left_force: out.left_force.magnitude(),
            grasp_force: self.gripper.grasp_force,
            left_contact_force: contact.left_contact_force,
        };
        let feedback = route_feedback(
            &sources,
            &acks,
            &self.calibration,
            self.config.condition.haptics_enabled(),
        )?;
        let telemetry = self.is_telemetry_tick();
        let mut levels = [0.0; 4];
        for (i, cmd) in feedback.iter().enumerate() {
            levels[i] = cmd.level;
            let changed = self.last_levels.is_none_or(|last| last[i] != cmd.level);
            if !cmd.pulses.is_empty() || (telemetry && changed) {
                outputs.push(WireMessage::FeedbackCommand {
                    t: now,
                    device: cmd.device,
                    level: cmd.level,
                    pulses: cmd.pulses.clone(),
                });
            }
        }
        if telemetry {
            self.last_levels = Some(levels);
        }

        self.contact = contact;
        self.last_tick = Some(out);
        if telemetry {
            outputs.push(WireMessage::RobotState(Box::new(self.state_frame(now))));
        }
        self.tick += 1;
        Ok(TickRecord { inputs, outputs })
    }

    fn is_telemetry_tick(&self) -> bool {
        let hz = u64::from(self.config.telemetry_hz);
        let k = self.tick;
        k == 0 || (k * hz) / self.rate_hz != ((k - 1) * hz) / self.rate_hz
    }

    /// Current robot state as a telemetry frame stamped `t`.
    pub fn state_frame(&self, t: Timestamp) -> RobotStateFrame {
        let (right_ee, left_ee) = self.end_effectors();
        let (right_force, left_force) = match &self.last_tick {
            Some(out) => (out.right_force.f.into(), out.left_force.f.into()),
            None => ([0.0; 3], [0.0; 3]),
        };
        RobotStateFrame {
            t,
            q_right: self.q_right.iter().copied().collect(),
            q_left: self.q_left.iter().copied().collect(),
            base: self.base,
            base_velocity: self.base_velocity.into(),
            gripper_aperture: self.gripper.aperture,
            gripper_target: self.gripper.target,
            contact: self.contact.clone(),
            right_active: self.commands.right_active,
            left_active: self.commands.left_active,
            control_point: self.commands.left_control_point,
            right_force,
            left_force,
            right_ee: right_ee.into(),
            left_ee: left_ee.into(),
            bottle: self.world.bottle().pose.position,
            phase: self.mission.phase,
            failures: self.mission.failures.iter().copied().collect(),
            t_start: self.mission.t_start,
        }
    }

    /// Trial summary so far; the last tick closes an unfinished trial.
    pub fn report(&self) -> Result<TrialReport, StationError> {
        let last = Timestamp::from_micros((self.tick.max(1) as i64 - 1) * self.period_us);
        Ok(trial_report(&self.mission, last)?)
    }

    /// Rope anchor of one operator arm, operator frame.
    pub fn anchor(&self, side: ArmSide) -> Vector3<f64> {
        self.controller.arm(side).anchor
    }

    pub fn channel_level(&self, channel: HapticChannel) -> f64 {
        let i = HapticChannel::ALL
            .iter()
            .position(|c| *c == channel)
            .expect("known channel");
        self.last_levels.map_or(0.0, |l| l[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::ButtonIndex;
    use crate::station::Condition;

    fn press(t: f64, side: ArmSide, button: ButtonIndex, right: [f64; 3]) -> WireMessage {
        WireMessage::OperatorInput {
            t: Timestamp::from_secs(t),
            right_wrist: right,
            left_wrist: [0.3, 0.2, 1.0],
            buttons: vec![ButtonPress { side, button }],
        }
    }

    fn run(stack: &mut Stack, until: f64) -> Vec<WireMessage> {
        let mut out = Vec::new();
        while stack.now() <= Timestamp::from_secs(until) {
            out.extend(stack.step().unwrap().outputs);
        }
        out
    }

    #[test]
    fn telemetry_decimated_to_sixty_hz() {
        let mut stack = Stack::new(&ConfigSnapshot::shipped(Condition::C)).unwrap();
        let out = run(&mut stack, 0.99);
        let states = out
            .iter()
            .filter(|m| matches!(m, WireMessage::RobotState(_)))
            .count();
        assert_eq!(states, 60);
    }

    #[test]
    fn zero_order_hold_between_inputs() {
        let mut stack = Stack::new(&ConfigSnapshot::shipped(Condition::C)).unwrap();
        stack
            .push_input(press(
                0.0,
                ArmSide::Right,
                ButtonIndex::Button1,
                [0.3, -0.2, 1.0],
            ))
            .unwrap();
        stack
            .push_input(WireMessage::OperatorInput {
                t: Timestamp::from_secs(0.1),
                right_wrist: [0.4, -0.2, 1.0],
                left_wrist: [0.3, 0.2, 1.0],
                buttons: vec![],
            })
            .unwrap();
        run(&mut stack, 0.2);
        let f_then = stack.last_tick.as_ref().unwrap().right_force.f;
        run(&mut stack, 1.2);
        assert_eq!(stack.last_tick.as_ref().unwrap().right_force.f, f_then);
        assert!((f_then.norm() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn condition_a_ignores_buttons_and_honours_tokens() {
        let mut stack = Stack::new(&ConfigSnapshot::shipped(Condition::A)).unwrap();
        stack
            .push_input(press(
                0.0,
                ArmSide::Right,
                ButtonIndex::Button1,
                [0.3, -0.2, 1.0],
            ))
            .unwrap();
        run(&mut stack, 0.05);
        assert!(!stack.commands().right_active);
        stack
            .push_input(WireMessage::ExternalCommand {
                t: Timestamp::from_secs(0.1),
                token: "right".into(),
            })
            .unwrap();
        let out = run(&mut stack, 0.5);
        assert!(stack.commands().right_active);
        assert!(out.iter().all(|m| match m {
            WireMessage::FeedbackCommand { level, pulses, .. } =>
                *level == 0.0 && pulses.is_empty(),
            _ => true,
        }));
    }

    #[test]
    fn condition_c_acks_button_presses() {
        let mut stack = Stack::new(&ConfigSnapshot::shipped(Condition::C)).unwrap();
        stack
            .push_input(press(
                0.0,
                ArmSide::Right,
                ButtonIndex::Button2,
                [0.3, -0.2, 1.0],
            ))
            .unwrap();
        stack
            .push_input(WireMessage::ExternalCommand {
                t: Timestamp::from_secs(0.01),
                token: "GRIPPER".into(),
            })
            .unwrap();
        let out = run(&mut stack, 0.1);
        let pulses: Vec<_> = out
            .iter()
            .filter_map(|m| match m {
                WireMessage::FeedbackCommand { device, pulses, .. } if !pulses.is_empty() => {
                    Some((*device, pulses.len()))
                }
                _ => None,
            })
            .collect();
        assert_eq!(pulses, vec![(HapticChannel::RightFinger, 1)]);
        assert_eq!(
            stack.commands().gripper,
            crate::robot::GripperTarget::Closed
        );
    }

    #[test]
    fn rejects_out_of_order_inputs() {
        let mut stack = Stack::new(&ConfigSnapshot::shipped(Condition::C)).unwrap();
        stack
            .push_input(press(
                1.0,
                ArmSide::Right,
                ButtonIndex::Button1,
                [0.3, -0.2, 1.0],
            ))
            .unwrap();
        assert!(stack
            .push_input(press(
                0.5,
                ArmSide::Right,
                ButtonIndex::Button1,
                [0.3, -0.2, 1.0]
            ))
            .is_err());
    }
}
