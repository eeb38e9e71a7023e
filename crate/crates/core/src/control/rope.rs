//! Virtual ropes: operator wrist displacement to control-point force, and the
//! base velocity law.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::profile::{CartesianGains, RopeParams};
use super::ControlError;
use crate::robot::ArmSide;

/// Robot body location a rope can attach to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlPoint {
    RightEE,
    LeftEE,
    Base,
}

impl ControlPoint {
    /// The right arm always pulls the right end-effector; the left arm pulls
    /// either the left end-effector or the base.
    pub fn allowed_for(self, arm: ArmSide) -> bool {
        matches!(
            (arm, self),
            (ArmSide::Right, ControlPoint::RightEE)
                | (ArmSide::Left, ControlPoint::LeftEE)
                | (ArmSide::Left, ControlPoint::Base)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorArmState {
    pub side: ArmSide,
    pub wrist: Vector3<f64>,
    pub anchor: Vector3<f64>,
    pub active: bool,
    pub rope: RopeParams,
}

impl OperatorArmState {
    pub fn new(side: ArmSide, wrist: Vector3<f64>, rope: RopeParams) -> Self {
        Self {
            side,
            wrist,
            anchor: wrist,
            active: false,
            rope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualForce {
    pub f: Vector3<f64>,
    pub source: ArmSide,
    pub target: ControlPoint,
}

impl VirtualForce {
    pub fn zero(source: ArmSide, target: ControlPoint) -> Self {
        Self {
            f: Vector3::zeros(),
            source,
            target,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.f.norm()
    }
}

/// Rope force magnitude for a displacement of length `distance`: a spring
/// engaging past the deadzone, saturated at `f_max`.
pub fn rope_tension(rope: &RopeParams, distance: f64) -> f64 {
    if distance <= rope.deadzone {
        0.0
    } else {
        (rope.gain * (distance - rope.deadzone)).min(rope.f_max)
    }
}

/// Force pulled by one operator arm onto `target`. Zero when the arm is
/// inactive or inside the deadzone around its anchor.
pub fn compute_virtual_force(arm: &OperatorArmState, target: ControlPoint) -> VirtualForce {
    if !arm.active {
        return VirtualForce::zero(arm.side, target);
    }
    let d = arm.wrist - arm.anchor;
    let distance = d.norm();
    let tension = rope_tension(&arm.rope, distance);
    if tension == 0.0 || !tension.is_finite() {
        return VirtualForce::zero(arm.side, target);
    }
    VirtualForce {
        f: d * (tension / distance),
        source: arm.side,
        target,
    }
}

/// Marks the arm active and re-anchors the rope at the current wrist, so the
/// force right after activation is zero.
pub fn set_anchor_on_activation(arm: &OperatorArmState) -> OperatorArmState {
    OperatorArmState {
        anchor: arm.wrist,
        active: true,
        ..*arm
    }
}

/// Cartesian velocity reference of the base, `diag(K_cart) f`, clamped
/// componentwise to the configured speed limit.
pub fn base_velocity_reference(
    gains: &CartesianGains,
    force: &VirtualForce,
) -> Result<Vector3<f64>, ControlError> {
    if force.target != ControlPoint::Base {
        return Err(ControlError::NotBaseForce(force.target));
    }
    if !force.f.iter().all(|v| v.is_finite()) {
        return Err(ControlError::NonFinite("virtual force"));
    }
    Ok(gains
        .k_cart
        .component_mul(&force.f)
        .map(|v| v.clamp(-gains.v_max, gains.v_max)))
}
