//! Virtual-rope control core: rope forces, joint admittance, base velocity
//! and the per-tick router.

mod admittance;
mod controller;
mod profile;
mod rope;

pub use admittance::admittance_step;
pub use controller::{ControlInputs, TickOutput, TpoController};
pub use profile::{
    AdmittanceParams, CartesianGains, ControlProfile, ReferenceState, RopeParams,
    CENTAURO_PAPER_PROFILE,
};
pub use rope::{
    base_velocity_reference, compute_virtual_force, rope_tension, set_anchor_on_activation,
    ControlPoint, OperatorArmState, VirtualForce,
};

use thiserror::Error;

use crate::robot::ModelError;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid control parameters: {0}")]
    InvalidParams(String),
    #[error("base velocity law applied to a force on {0:?}")]
    NotBaseForce(ControlPoint),
    #[error("left arm cannot pull {0:?}")]
    Routing(ControlPoint),
    #[error("tick period must be {expected} s, got {got} s")]
    TickPeriod { expected: f64, got: f64 },
    #[error("malformed control profile: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}
