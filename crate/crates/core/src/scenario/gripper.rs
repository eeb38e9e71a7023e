use serde::{Deserialize, Serialize};

use crate::robot::{GripperState, GripperTarget};

/// Jaw speed and squeeze stiffness of the simulated gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperParams {
    /// Jaw speed, m/s.
    pub v_g: f64,
    /// Squeeze stiffness, N/m of jaw interpenetration.
    pub k_g: f64,
    pub f_grip_max: f64,
}

/// Squeeze force for jaws at `aperture` around an object `width` wide.
pub fn grasp_force(width: f64, aperture: f64, params: &GripperParams) -> f64 {
    if aperture >= width {
        0.0
    } else {
        (params.k_g * (width - aperture)).min(params.f_grip_max)
    }
}

/// Moves the jaws toward the target at constant speed. Closing onto an
/// object stops once the squeeze force saturates.
pub fn gripper_step(
    gripper: &GripperState,
    object_width: Option<f64>,
    params: &GripperParams,
    dt: f64,
) -> GripperState {
    let goal = match gripper.target {
        GripperTarget::Open => gripper.aperture_max,
        GripperTarget::Closed => 0.0,
    };
    let step = params.v_g * dt;
    let mut aperture = if goal > gripper.aperture {
        (gripper.aperture + step).min(goal)
    } else {
        (gripper.aperture - step).max(goal)
    };
    if let Some(width) = object_width {
        let floor = width - params.f_grip_max / params.k_g;
        if gripper.target == GripperTarget::Closed && aperture < floor {
            aperture = floor.min(gripper.aperture);
        }
    }
    let aperture = aperture.clamp(0.0, gripper.aperture_max);
    let force = object_width.map_or(0.0, |w| grasp_force(w, aperture, params));
    GripperState {
        aperture,
        grasp_force: force,
        ..*gripper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GripperParams {
        GripperParams {
            v_g: 0.1,
            k_g: 500.0,
            f_grip_max: 10.0,
        }
    }

    #[test]
    fn squeeze_spring() {
        assert!((grasp_force(0.05, 0.04, &params()) - 5.0).abs() < 1e-12);
        assert_eq!(grasp_force(0.05, 0.05, &params()), 0.0);
        assert_eq!(grasp_force(0.05, 0.0, &params()), 10.0);
    }

    #[test]
    fn closing_on_object_pinned_at_saturation() {
        let p = GripperParams {
            f_grip_max: 5.0,
            ..params()
        };
        let g = GripperState {
            aperture: 0.04,
            aperture_max: 0.1,
            target: GripperTarget::Closed,
            grasp_force: 5.0,
        };
        let next = gripper_step(&g, Some(0.05), &p, 0.01);
        assert!((next.aperture - 0.04).abs() < 1e-12);
        assert!((next.grasp_force - 5.0).abs() < 1e-9);
    }

    #[test]
    fn open_without_object_has_no_force() {
        let g = GripperState::open(0.1);
        let next = gripper_step(&g, None, &params(), 0.01);
        assert_eq!(next.aperture, 0.1);
        assert_eq!(next.grasp_force, 0.0);
    }

    #[test]
    fn contact_onset_is_force_free() {
        let g = GripperState {
            aperture: 0.051,
            aperture_max: 0.1,
            target: GripperTarget::Closed,
            grasp_force: 0.0,
        };
        // one step of 1 mm lands exactly on the object surface
        let next = gripper_step(&g, Some(0.05), &params(), 0.01);
        assert!((next.aperture - 0.05).abs() < 1e-12);
        assert!(next.grasp_force < 1e-9);
    }

    #[test]
    fn full_close_on_bottle() {
        let mut g = GripperState {
            target: GripperTarget::Closed,
            ..GripperState::open(0.1)
        };
        for _ in 0..200 {
            g = gripper_step(&g, Some(0.06), &params(), 0.01);
        }
        assert!((g.aperture - 0.04).abs() < 1e-12);
        assert_eq!(g.grasp_force, 10.0);
        g.target = GripperTarget::Open;
        for _ in 0..100 {
            g = gripper_step(&g, Some(0.06), &params(), 0.01);
        }
        assert_eq!(g.aperture, 0.1);
        assert_eq!(g.grasp_force, 0.0);
    }

    #[test]
    fn closing_without_object_reaches_zero() {
        let mut g = GripperState {
            target: GripperTarget::Closed,
            ..GripperState::open(0.1)
        };
        for _ in 0..200 {
            g = gripper_step(&g, None, &params(), 0.01);
        }
        assert_eq!(g.aperture, 0.0);
        assert_eq!(g.grasp_force, 0.0);
    }
}
