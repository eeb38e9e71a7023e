//! Desk-scale pick, place and press mission.

mod geometry;
mod gripper;
mod mission;
mod world;

use thiserror::Error;

use crate::time::Timestamp;

pub use geometry::{boxes_overlap, shape_overlaps_box, signed_distance, OrientedBox, Pose, Shape};
pub use gripper::{grasp_force, gripper_step, GripperParams};
pub use mission::{
    mission_update, trial_report, Failure, MissionEventKind, MissionInput, MissionState, Phase,
    TrialReport,
};
pub use world::{
    BottleHold, ContactReport, GripperConfig, RobotPoses, Role, ScenarioDoc, Thresholds, World,
    WorldEvents, WorldObject, PAPER_MISSION,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("time went backwards: {got} after {last}")]
    TimeRegression { last: Timestamp, got: Timestamp },
    #[error("trial never started")]
    NotStarted,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<(World, MissionState), ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    Ok((World::from_doc(&doc)?, MissionState::new()))
}
