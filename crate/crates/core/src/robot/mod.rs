//! Kinematic model and state of the simulated mobile manipulator.

mod base;
mod chain;
mod description;
mod gripper;

pub use base::{integrate_base, wrap_angle, BasePose};
pub use chain::{base_to_world, JointState, KinematicChain, Link};
pub use description::{
    load_robot_description, Arm, ArmDescription, ArmSide, BaseDescription, EndEffector,
    GripperDescription, LinkDescription, RobotDescription, RobotModel, DEFAULT_ROBOT,
};
pub use gripper::{GripperState, GripperTarget};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed robot description: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("joint axis of link {link} is not unit length (norm {norm})")]
    NonUnitAxis { link: usize, norm: f64 },
    #[error("kinematic chain has no joints")]
    EmptyChain,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("robot description has no `{0}` arm")]
    MissingArm(&'static str),
    #[error("robot description has more than one `{0}` arm")]
    DuplicateArm(&'static str),
    #[error("unknown arm `{0}` (expected `right` and `left`)")]
    UnknownArm(String),
    #[error("arm `{arm}`: {source}")]
    InArm {
        arm: String,
        #[source]
        source: Box<ModelError>,
    },
    #[error("invalid robot description: {0}")]
    Invalid(String),
}

impl ModelError {
    fn in_arm(self, arm: &str) -> Self {
        ModelError::InArm {
            arm: arm.to_owned(),
            source: Box::new(self),
        }
    }
}
