//! JSON robot description and the validated [`RobotModel`] built from it.

use nalgebra::{DVector, Isometry3, Vector3};
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use super::ModelError;

/// The shipped desk-scale surrogate: two 6-DOF arms on a planar base.
pub const DEFAULT_ROBOT: &str = include_str!("../../../../robots/centauro_surrogate.json");

const DEFAULT_BALL_RADIUS: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescription {
    pub arms: Vec<ArmDescription>,
    pub gripper: GripperDescription,
    #[serde(default)]
    pub base: BaseDescription,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDescription {
    pub name: String,
    /// Shoulder mount point in the robot-base frame.
    #[serde(default)]
    pub mount: [f64; 3],
    /// Initial joint configuration; all zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    pub links: Vec<LinkDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDescription {
    pub axis: [f64; 3],
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperDescription {
    pub aperture_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseDescription {
    /// Half extents of the base footprint along its x and y axes.
    #[serde(default = "default_footprint")]
    pub footprint: [f64; 2],
    #[serde(default = "default_base_height")]
    pub height: f64,
}

fn default_footprint() -> [f64; 2] {
    [0.3, 0.3]
}

fn default_base_height() -> f64 {
    0.6
}

impl Default for BaseDescription {
    fn default() -> Self {
        Self {
            footprint: default_footprint(),
            height: default_base_height(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmSide {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndEffector {
    /// 1-DOF beak gripper.
    Gripper { aperture_max: f64 },
    /// Passive ball used for non-prehensile contact.
    Ball { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub side: ArmSide,
    pub chain: KinematicChain,
    pub home: DVector<f64>,
    pub end_effector: EndEffector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub right: Arm,
    pub left: Arm,
    pub footprint: [f64; 2],
    pub base_height: f64,
}

impl RobotModel {
    pub fn arm(&self, side: ArmSide) -> &Arm {
        match side {
            ArmSide::Right => &self.right,
            ArmSide::Left => &self.left,
        }
    }

    pub fn aperture_max(&self) -> f64 {
        match self.right.end_effector {
            EndEffector::Gripper { aperture_max } => aperture_max,
            EndEffector::Ball { .. } => 0.0,
        }
    }

    pub fn ball_radius(&self) -> f64 {
        match self.left.end_effector {
            EndEffector::Ball { radius } => radius,
            EndEffector::Gripper { .. } => 0.0,
        }
    }
}

/// Parses and validates a robot description document.
pub fn load_robot_description(text: &str) -> Result<RobotModel, ModelError> {
    let desc: RobotDescription = serde_json::from_str(text)?;
    RobotModel::try_from(&desc)
}

impl TryFrom<&RobotDescription> for RobotModel {
    type Error = ModelError;

    fn try_from(desc: &RobotDescription) -> Result<Self, ModelError> {
        let find = |name: &'static str| {
            let mut found = desc.arms.iter().filter(|a| a.name == name);
            match (found.next(), found.next()) {
                (Some(arm), None) => Ok(arm),
                (None, _) => Err(ModelError::MissingArm(name)),
                (Some(_), Some(_)) => Err(ModelError::DuplicateArm(name)),
            }
        };
        if let Some(extra) = desc
            .arms
            .iter()
            .find(|a| a.name != "right" && a.name != "left")
        {
            return Err(ModelError::UnknownArm(extra.name.clone()));
        }
        let aperture_max = desc.gripper.aperture_max;
        if !(aperture_max.is_finite() && aperture_max > 0.0) {
            return Err(ModelError::Invalid(
                "gripper aperture_max must be positive".into(),
            ));
        }
        let right = build_arm(
            find("right")?,
            ArmSide::Right,
            EndEffector::Gripper { aperture_max },
        )?;
        let left_desc = find("left")?;
        let radius = left_desc.ball_radius.unwrap_or(DEFAULT_BALL_RADIUS);
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ModelError::Invalid("ball_radius must be positive".into()));
        }
        let left = build_arm(left_desc, ArmSide::Left, EndEffector::Ball { radius })?;
        let [fx, fy] = desc.base.footprint;
        if !(fx > 0.0 && fy > 0.0 && desc.base.height > 0.0)
            || ![fx, fy, desc.base.height].iter().all(|v| v.is_finite())
        {
            return Err(ModelError::Invalid(
                "base footprint and height must be positive".into(),
            ));
        }
        Ok(Self {
            right,
            left,
            footprint: desc.base.footprint,
            base_height: desc.base.height,
        })
    }
}

fn build_arm(
    desc: &ArmDescription,
    side: ArmSide,
    end_effector: EndEffector,
) -> Result<Arm, ModelError> {
    if !desc.mount.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFinite("arm mount"));
    }
    let base = Isometry3::translation(desc.mount[0], desc.mount[1], desc.mount[2]);
    let chain = KinematicChain::new(base, desc.links.iter().map(|l| (l.axis, l.offset)))
        .map_err(|e| e.in_arm(&desc.name))?;
    let home = match &desc.home {
        Some(q) if q.len() != chain.dof() => {
            return Err(ModelError::DimensionMismatch {
                expected: chain.dof(),
                got: q.len(),
            })
        }
        Some(q) if !q.iter().all(|v| v.is_finite()) => return Err(ModelError::NonFinite("home")),
        Some(q) => DVector::from_column_slice(q),
        None => DVector::zeros(chain.dof()),
    };
    Ok(Arm {
        side,
        chain,
        home,
        end_effector,
    })
}

impl Arm {
    /// Terminal point in the robot-base frame.
    pub fn tip(&self, q: &DVector<f64>) -> Vector3<f64> {
        self.chain
            .forward_kinematics(q.as_slice())
            .expect("joint state sized from the same chain")
    }
}
