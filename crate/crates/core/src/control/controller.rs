//! Per-tick orchestration: both operator arms to forces, forces routed to the
//! right-arm admittance, the left-arm admittance or the base.

use nalgebra::{DVector, Vector3};

use super::admittance::admittance_step;
use super::profile::{AdmittanceParams, CartesianGains, ControlProfile, ReferenceState};
use super::rope::{
    base_velocity_reference, compute_virtual_force, set_anchor_on_activation, ControlPoint,
    OperatorArmState, VirtualForce,
};
use super::ControlError;
use crate::robot::{ArmSide, RobotModel};

/// Operator-side inputs sampled for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    pub right_wrist: Vector3<f64>,
    pub left_wrist: Vector3<f64>,
    pub right_active: bool,
    pub left_active: bool,
    pub left_control_point: ControlPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub right: ReferenceState,
    pub left: ReferenceState,
    /// Present whenever the left rope is attached to the base.
    pub base_velocity: Option<Vector3<f64>>,
    pub right_force: VirtualForce,
    pub left_force: VirtualForce,
}

impl TickOutput {
    /// |f_right| and |f_left| for the forearm squeeze channels.
    pub fn feedback_magnitudes(&self) -> (f64, f64) {
        (self.right_force.magnitude(), self.left_force.magnitude())
    }
}

/// Owns the mutable control state of both arms. Single-threaded: one
/// `control_tick` per fixed period.
#[derive(Debug, Clone)]
pub struct TpoController {
    right_params: AdmittanceParams,
    left_params: AdmittanceParams,
    gains: CartesianGains,
    dt: f64,
    right_arm: OperatorArmState,
    left_arm: OperatorArmState,
    right_ref: ReferenceState,
    left_ref: ReferenceState,
}

impl TpoController {
    /// Starts both arms at rest at the model's home configuration, with the
    /// operator wrists at the given rest poses.
    pub fn new(
        profile: &ControlProfile,
        model: &RobotModel,
        right_wrist: Vector3<f64>,
        left_wrist: Vector3<f64>,
    ) -> Result<Self, ControlError> {
        profile.validate()?;
        let params = profile.admittance()?;
        for arm in [&model.right, &model.left] {
            if arm.chain.dof() != params.dof() {
                return Err(ControlError::Dimension {
                    what: "profile joints",
                    expected: arm.chain.dof(),
                    got: params.dof(),
                });
            }
        }
        let rope = profile.rope()?;
        Ok(Self {
            right_params: params.clone(),
            left_params: params,
            gains: profile.cartesian_gains()?,
            dt: profile.dt,
            right_arm: OperatorArmState::new(ArmSide::Right, right_wrist, rope),
            left_arm: OperatorArmState::new(ArmSide::Left, left_wrist, rope),
            right_ref: ReferenceState::at_rest(model.right.home.clone()),
            left_ref: ReferenceState::at_rest(model.left.home.clone()),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn arm(&self, side: ArmSide) -> &OperatorArmState {
        match side {
            ArmSide::Right => &self.right_arm,
            ArmSide::Left => &self.left_arm,
        }
    }

    pub fn reference(&self, side: ArmSide) -> &ReferenceState {
        match side {
            ArmSide::Right => &self.right_ref,
            ArmSide::Left => &self.left_ref,
        }
    }

    fn arm_mut(&mut self, side: ArmSide) -> &mut OperatorArmState {
        match side {
            ArmSide::Right => &mut self.right_arm,
            ArmSide::Left => &mut self.left_arm,
        }
    }

    /// Activation edge: re-anchors the rope at `wrist`.
    pub fn activate(&mut self, side: ArmSide, wrist: Vector3<f64>) {
        let arm = self.arm_mut(side);
        arm.wrist = wrist;
        *arm = set_anchor_on_activation(arm);
    }

    pub fn deactivate(&mut self, side: ArmSide) {
        self.arm_mut(side).active = false;
    }

    fn sync_activation(&mut self, side: ArmSide, active: bool, wrist: Vector3<f64>) {
        let was = self.arm(side).active;
        match (was, active) {
            (false, true) => self.activate(side, wrist),
            (true, false) => self.deactivate(side),
            _ => {}
        }
        self.arm_mut(side).wrist = wrist;
    }

    pub fn control_tick(
        &mut self,
        model: &RobotModel,
        q_right: &DVector<f64>,
        q_left: &DVector<f64>,
        inputs: &ControlInputs,
        dt: f64,
    ) -> Result<TickOutput, ControlError> {
        if dt != self.dt {
            return Err(ControlError::TickPeriod {
                expected: self.dt,
                got: dt,
            });
        }
        if !inputs.left_control_point.allowed_for(ArmSide::Left) {
            return Err(ControlError::Routing(inputs.left_control_point));
        }
        if !inputs
            .right_wrist
            .iter()
            .chain(inputs.left_wrist.iter())
            .all(|v| v.is_finite())
        {
            return Err(ControlError::NonFinite("wrist position"));
        }
        self.sync_activation(ArmSide::Right, inputs.right_active, inputs.right_wrist);
        self.sync_activation(ArmSide::Left, inputs.left_active, inputs.left_wrist);

        let right_force = compute_virtual_force(&self.right_arm, ControlPoint::RightEE);
        let left_force = compute_virtual_force(&self.left_arm, inputs.left_control_point);

        let jac_right = model.right.chain.jacobian(q_right.as_slice())?;
        let right = admittance_step(
            &self.right_params,
            q_right,
            &self.right_ref,
            &jac_right,
            &right_force,
            dt,
        )?;

        let (left, base_velocity) = match inputs.left_control_point {
            ControlPoint::Base => {
                let v = base_velocity_reference(&self.gains, &left_force)?;
                let n = self.left_ref.dof();
                let held = ReferenceState {
                    q_ref: self.left_ref.q_ref.clone(),
                    q_dot_ref: DVector::zeros(n),
                    q_ddot_ref: DVector::zeros(n),
                };
                (held, Some(v))
            }
            _ => {
                let jac_left = model.left.chain.jacobian(q_left.as_slice())?;
                let next = admittance_step(
                    &self.left_params,
                    q_left,
                    &self.left_ref,
                    &jac_left,
                    &left_force,
                    dt,
                )?;
                (next, None)
            }
        };

        self.right_ref = right.clone();
        self.left_ref = left.clone();
        Ok(TickOutput {
            right,
            left,
            base_velocity,
            right_force,
            left_force,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{load_robot_description, DEFAULT_ROBOT};

    fn setup() -> (RobotModel, TpoController) {
        let model = load_robot_description(DEFAULT_ROBOT).unwrap();
        let ctl = TpoController::new(
            &ControlProfile::centauro_paper(),
            &model,
            Vector3::new(0.3, -0.2, 1.0),
            Vector3::new(0.3, 0.2, 1.0),
        )
        .unwrap();
        (model, ctl)
    }

    fn inputs(right_active: bool, left_active: bool, cp: ControlPoint) -> ControlInputs {
        ControlInputs {
            right_wrist: Vector3::new(0.3, -0.2, 1.0),
            left_wrist: Vector3::new(0.3, 0.2, 1.0),
            right_active,
            left_active,
            left_control_point: cp,
        }
    }

    #[test]
    fn inactive_tick_is_identity() {
        let (model, mut ctl) = setup();
        let q = model.right.home.clone();
        let before_r = ctl.reference(ArmSide::Right).clone();
        let before_l = ctl.reference(ArmSide::Left).clone();
        let mut inp = inputs(false, false, ControlPoint::LeftEE);
        inp.right_wrist.x += 0.3;
        let out = ctl.control_tick(&model, &q, &q, &inp, 0.01).unwrap();
        assert_eq!(out.right, before_r);
        assert_eq!(out.left, before_l);
        assert_eq!(out.feedback_magnitudes(), (0.0, 0.0));
    }

    #[test]
    fn left_rope_on_base_moves_only_the_base() {
        let (model, mut ctl) = setup();
        let q = model.left.home.clone();
        ctl.control_tick(
            &model,
            &q,
            &q,
            &inputs(false, true, ControlPoint::Base),
            0.01,
        )
        .unwrap();
        let mut inp = inputs(false, true, ControlPoint::Base);
        inp.left_wrist.y += 0.1;
        let before = ctl.reference(ArmSide::Left).q_ref.clone();
        let out = ctl.control_tick(&model, &q, &q, &inp, 0.01).unwrap();
        let v = out.base_velocity.unwrap();
        assert!(v.y > 0.0);
        assert_eq!(out.left.q_ref, before);
        assert_eq!(out.left_force.target, ControlPoint::Base);
    }

    #[test]
    fn right_force_magnitude_reported() {
        let (model, mut ctl) = setup();
        let q = model.right.home.clone();
        ctl.control_tick(
            &model,
            &q,
            &q,
            &inputs(true, false, ControlPoint::LeftEE),
            0.01,
        )
        .unwrap();
        let mut inp = inputs(true, false, ControlPoint::LeftEE);
        inp.right_wrist.x += 0.1;
        let out = ctl.control_tick(&model, &q, &q, &inp, 0.01).unwrap();
        let (fr, fl) = out.feedback_magnitudes();
        assert!((fr - 4.0).abs() < 1e-12);
        assert_eq!(fl, 0.0);
        assert!(out.base_velocity.is_none());
    }

    #[test]
    fn rejects_off_period_tick() {
        let (model, mut ctl) = setup();
        let q = model.right.home.clone();
        assert!(matches!(
            ctl.control_tick(
                &model,
                &q,
                &q,
                &inputs(false, false, ControlPoint::LeftEE),
                0.02
            ),
            Err(ControlError::TickPeriod { .. })
        ));
        assert!(matches!(
            ctl.control_tick(
                &model,
                &q,
                &q,
                &inputs(false, false, ControlPoint::RightEE),
                0.01
            ),
            Err(ControlError::Routing(ControlPoint::RightEE))
        ));
    }
}
