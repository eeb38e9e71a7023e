use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Planar pose of the mobile base. Heading is held fixed by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePose {
    pub position: [f64; 3],
    pub heading: f64,
}

impl BasePose {
    pub fn new(position: [f64; 3], heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// One explicit Euler step of the base position under a world-frame velocity
/// reference.
pub fn integrate_base(
    pose: &BasePose,
    x_dot_ref: &Vector3<f64>,
    dt: f64,
) -> Result<BasePose, ModelError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ModelError::Invalid(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !x_dot_ref.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFinite("base velocity reference"));
    }
    let p = pose.position() + x_dot_ref * dt;
    Ok(BasePose {
        position: p.into(),
        heading: pose.heading,
    })
}
