//! Joint-level admittance law.
//!
//! The commanded acceleration is
//!
//! ```text
//! q_ddot_ref = M^-1 (K (q_eq - q) - D q_dot_ref(t-1) + J^T f)
//! ```
//!
//! with the damping acting on the previous velocity reference. The velocity
//! and position references are advanced with an exponential step: the
//! damping is integrated exactly over the tick while the spring and force
//! terms are held, so a constant force yields the exact first-order velocity
//! response at every tick.

use nalgebra::{DVector, Matrix3xX};

use super::profile::{AdmittanceParams, ReferenceState};
use super::rope::VirtualForce;
use super::ControlError;

pub fn admittance_step(
    params: &AdmittanceParams,
    q: &DVector<f64>,
    prev: &ReferenceState,
    jacobian: &Matrix3xX<f64>,
    force: &VirtualForce,
    dt: f64,
) -> Result<ReferenceState, ControlError> {
    let n = params.dof();
    for (what, got) in [
        ("q", q.len()),
        ("reference", prev.dof()),
        ("jacobian columns", jacobian.ncols()),
    ] {
        if got != n {
            return Err(ControlError::Dimension {
                what,
                expected: n,
                got,
            });
        }
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ControlError::InvalidParams(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    if !q.iter().all(|v| v.is_finite()) || !prev.is_finite() {
        return Err(ControlError::NonFinite("joint state"));
    }
    if !force.f.iter().all(|v| v.is_finite()) || !jacobian.iter().all(|v| v.is_finite()) {
        return Err(ControlError::NonFinite("generalized force"));
    }

    let tau = jacobian.transpose() * force.f;
    let mut next = prev.clone();
    for i in 0..n {
        let m = params.mass[i];
        let d = params.damping[i];
        let v = prev.q_dot_ref[i];
        let drive = params.stiffness[i] * (params.q_eq[i] - q[i]) + tau[i];
        let acc = (drive - d * v) / m;

        let rate = d / m;
        let x = rate * dt;
        // (1 - e^{-x}) / rate and the matching position weight
        let vel_gain = -(-x).exp_m1() / rate;
        let pos_gain = (x + (-x).exp_m1()) / (rate * rate);

        next.q_ddot_ref[i] = acc;
        next.q_dot_ref[i] = v + acc * vel_gain;
        next.q_ref[i] = prev.q_ref[i] + v * dt + acc * pos_gain;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlPoint;
    use crate::robot::ArmSide;
    use nalgebra::Vector3;

    fn one_dof(m: f64, k: f64, d: f64, q_eq: f64) -> AdmittanceParams {
        AdmittanceParams::new(
            DVector::from_element(1, m),
            DVector::from_element(1, k),
            DVector::from_element(1, d),
            DVector::from_element(1, q_eq),
        )
        .unwrap()
    }

    fn force(f: [f64; 3]) -> VirtualForce {
        VirtualForce {
            f: Vector3::from(f),
            source: ArmSide::Right,
            target: ControlPoint::RightEE,
        }
    }

    fn unit_jacobian() -> Matrix3xX<f64> {
        Matrix3xX::from_column_slice(&[1.0, 0.0, 0.0])
    }

    #[test]
    fn acceleration_from_force() {
        let prev = ReferenceState::at_rest(DVector::zeros(1));
        let next = admittance_step(
            &one_dof(1.0, 0.0, 2.0, 0.0),
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([4.0, 0.0, 0.0]),
            0.01,
        )
        .unwrap();
        assert_eq!(next.q_ddot_ref[0], 4.0);
        assert!(next.q_dot_ref[0] > 0.0 && next.q_ref[0] > 0.0);
    }

    #[test]
    fn acceleration_from_spring() {
        let prev = ReferenceState::at_rest(DVector::zeros(1));
        let next = admittance_step(
            &one_dof(1.0, 3.0, 2.0, 1.0),
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([0.0; 3]),
            0.01,
        )
        .unwrap();
        assert_eq!(next.q_ddot_ref[0], 3.0);
    }

    #[test]
    fn damping_uses_previous_velocity() {
        let mut prev = ReferenceState::at_rest(DVector::zeros(1));
        prev.q_dot_ref[0] = 1.5;
        let next = admittance_step(
            &one_dof(2.0, 0.0, 4.0, 0.0),
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([0.0; 3]),
            0.01,
        )
        .unwrap();
        assert_eq!(next.q_ddot_ref[0], -3.0);
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let prev = ReferenceState::at_rest(DVector::from_element(1, 0.7));
        for dt in [1e-4, 0.01, 0.5, 3.0] {
            let next = admittance_step(
                &one_dof(1.0, 0.0, 2.0, -4.0),
                &prev.q_ref,
                &prev,
                &unit_jacobian(),
                &force([0.0; 3]),
                dt,
            )
            .unwrap();
            assert_eq!(next, prev);
        }
    }

    #[test]
    fn force_orthogonal_to_jacobian_does_nothing() {
        let prev = ReferenceState::at_rest(DVector::zeros(1));
        let next = admittance_step(
            &one_dof(1.0, 0.0, 2.0, 0.0),
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([0.0, 5.0, -2.0]),
            0.01,
        )
        .unwrap();
        assert_eq!(next, prev);
    }

    #[test]
    fn rejects_mismatched_dimensions_and_bad_input() {
        let params = one_dof(1.0, 0.0, 2.0, 0.0);
        let prev = ReferenceState::at_rest(DVector::zeros(1));
        let two_cols = Matrix3xX::zeros(2);
        assert!(admittance_step(
            &params,
            &DVector::zeros(1),
            &prev,
            &two_cols,
            &force([0.0; 3]),
            0.01
        )
        .is_err());
        assert!(admittance_step(
            &params,
            &DVector::zeros(2),
            &prev,
            &unit_jacobian(),
            &force([0.0; 3]),
            0.01
        )
        .is_err());
        assert!(admittance_step(
            &params,
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([0.0; 3]),
            0.0
        )
        .is_err());
        assert!(admittance_step(
            &params,
            &DVector::zeros(1),
            &prev,
            &unit_jacobian(),
            &force([f64::INFINITY, 0.0, 0.0]),
            0.01
        )
        .is_err());
    }
}
