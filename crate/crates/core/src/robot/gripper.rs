use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GripperTarget {
    Open,
    Closed,
}

impl GripperTarget {
    pub fn toggled(self) -> Self {
        match self {
            GripperTarget::Open => GripperTarget::Closed,
            GripperTarget::Closed => GripperTarget::Open,
        }
    }
}

/// State of the 1-DOF beak gripper on the right arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperState {
    /// Jaw opening in meters, within `[0, aperture_max]`.
    pub aperture: f64,
    pub aperture_max: f64,
    pub target: GripperTarget,
    /// Squeeze force on a contacted object; zero without contact.
    pub grasp_force: f64,
}

impl GripperState {
    pub fn open(aperture_max: f64) -> Self {
        Self {
            aperture: aperture_max,
            aperture_max,
            target: GripperTarget::Open,
            grasp_force: 0.0,
        }
    }
}
