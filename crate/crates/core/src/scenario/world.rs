//! Desk-scale world: objects, penalty contacts, collisions and the bottle.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::geometry::{shape_overlaps_box, signed_distance, OrientedBox, Pose, Shape};
use super::gripper::GripperParams;
use super::ScenarioError;
use crate::robot::{BasePose, GripperState};

/// The shipped pick-place-press mission layout.
pub const PAPER_MISSION: &str = include_str!("../../../../scenarios/paper_mission.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Bottle,
    Table,
    Obstacle,
    Box,
    EmergencyButton,
    Drawer,
}

impl Role {
    /// Objects the robot must not hit.
    pub fn is_hazard(self) -> bool {
        matches!(self, Role::Table | Role::Obstacle | Role::Drawer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldObject {
    pub id: String,
    pub role: Role,
    pub shape: Shape,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Contact stiffness, N/m of penetration.
    pub k_c: f64,
    pub k_g: f64,
    /// Minimum squeeze that holds the bottle.
    pub f_hold: f64,
    /// Button force that ends the mission.
    pub f_press: f64,
    pub f_grip_max: f64,
    /// Height above its resting place at which the bottle counts as lifted.
    #[serde(default = "default_lift_height")]
    pub lift_height: f64,
}

fn default_lift_height() -> f64 {
    0.02
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperConfig {
    pub v_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_max: Option<f64>,
}

/// Scenario document as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub objects: Vec<WorldObject>,
    pub thresholds: Thresholds,
    pub gripper: GripperConfig,
    /// Initial base pose; origin when absent.
    #[serde(default = "default_start")]
    pub start: BasePose,
}

fn default_start() -> BasePose {
    BasePose::new([0.0; 3], 0.0)
}

/// Where the robot currently is, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotPoses {
    pub base: BasePose,
    pub footprint: [f64; 2],
    pub base_height: f64,
    /// Joint origins and tip of the right arm; the last point is the gripper.
    pub right_points: Vec<Vector3<f64>>,
    /// Joint origins and tip of the left arm; the last point is the ball center.
    pub left_points: Vec<Vector3<f64>>,
    pub ball_radius: f64,
}

impl RobotPoses {
    pub fn right_tip(&self) -> Vector3<f64> {
        *self.right_points.last().expect("chains are non-empty")
    }

    pub fn left_tip(&self) -> Vector3<f64> {
        *self.left_points.last().expect("chains are non-empty")
    }

    fn footprint_box(&self) -> OrientedBox {
        let [x, y, z] = self.base.position;
        OrientedBox {
            pose: Pose {
                position: [x, y, z + self.base_height / 2.0],
                heading: self.base.heading,
            },
            half_extents: [self.footprint[0], self.footprint[1], self.base_height / 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BottleHold {
    /// Resting wherever it was left.
    Free,
    /// Held by the gripper; world offset from the gripper point to the
    /// bottle center, fixed at grasp time.
    Grasped { offset: Vector3<f64> },
    /// Put back into the jaws after a drop, waiting for the gripper to
    /// squeeze it again.
    Respawned { offset: Vector3<f64> },
    /// Released inside the box.
    Placed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactReport {
    pub grasp_force: f64,
    /// Penalty force on the left ball end-effector, N.
    pub left_contact_force: f64,
    /// Penalty force on the emergency button, N.
    pub button_force: f64,
    /// Ids of hazard objects the robot currently overlaps.
    pub collisions: Vec<String>,
}

/// Discrete happenings of one world step, consumed by the mission tracker.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldEvents {
    pub grasped: bool,
    /// `Some(in_box)` when the gripper let go of the bottle this step.
    pub released: Option<bool>,
    pub bottle_lifted: bool,
    pub button_pressed: bool,
    pub collision: bool,
}

#[derive(Debug, Clone)]
pub struct World {
    objects: Vec<WorldObject>,
    thresholds: Thresholds,
    gripper: GripperConfig,
    start: BasePose,
    bottle: usize,
    bottle_rest_z: f64,
    hold: BottleHold,
}

impl World {
    pub fn from_doc(doc: &ScenarioDoc) -> Result<Self, ScenarioError> {
        let mut seen = std::collections::BTreeSet::new();
        for obj in &doc.objects {
            if !seen.insert(obj.id.as_str()) {
                return Err(ScenarioError::DuplicateId(obj.id.clone()));
            }
            if !obj.shape.is_valid()
                || !obj
                    .pose
                    .position
                    .iter()
                    .chain([&obj.pose.heading])
                    .all(|v| v.is_finite())
            {
                return Err(ScenarioError::Invalid(format!(
                    "object `{}` has invalid geometry",
                    obj.id
                )));
            }
        }
        let bottles: Vec<usize> = doc
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.role == Role::Bottle)
            .map(|(i, _)| i)
            .collect();
        let bottle = match bottles.as_slice() {
            [one] => *one,
            [] => return Err(ScenarioError::Invalid("scenario has no bottle".into())),
            _ => {
                return Err(ScenarioError::Invalid(
                    "scenario has more than one bottle".into(),
                ))
            }
        };
        let t = &doc.thresholds;
        if ![
            t.k_c,
            t.k_g,
            t.f_hold,
            t.f_press,
            t.f_grip_max,
            doc.gripper.v_g,
            t.lift_height,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(ScenarioError::Invalid(
                "thresholds and gripper speed must be > 0".into(),
            ));
        }
        if t.f_hold > t.f_grip_max {
            return Err(ScenarioError::Invalid("f_hold exceeds f_grip_max".into()));
        }
        Ok(Self {
            bottle_rest_z: doc.objects[bottle].pose.position[2],
            objects: doc.objects.clone(),
            thresholds: *t,
            gripper: doc.gripper,
            start: doc.start,
            bottle,
            hold: BottleHold::Free,
        })
    }

    pub fn objects(&self) -> &[WorldObject] {
        &self.objects
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn start(&self) -> BasePose {
        self.start
    }

    pub fn gripper_params(&self) -> GripperParams {
        GripperParams {
            v_g: self.gripper.v_g,
            k_g: self.thresholds.k_g,
            f_grip_max: self.thresholds.f_grip_max,
        }
    }

    pub fn gripper_config(&self) -> &GripperConfig {
        &self.gripper
    }

    pub fn bottle(&self) -> &WorldObject {
        &self.objects[self.bottle]
    }

    pub fn bottle_hold(&self) -> BottleHold {
        self.hold
    }

    fn bottle_at_jaws(&self, tip: &Vector3<f64>) -> bool {
        let b = self.bottle();
        let local = b.pose.to_local(tip);
        let radial = match b.shape {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents } => half_extents[0].min(half_extents[1]),
        };
        local.xy().norm() <= radial && local.z.abs() <= b.shape.half_height()
    }

    /// Width of the object between the jaws at gripper point `tip`, if any.
    pub fn object_width_at_jaws(&self, tip: &Vector3<f64>) -> Option<f64> {
        let width = self.bottle().shape.grip_width();
        match self.hold {
            BottleHold::Grasped { .. } | BottleHold::Respawned { .. } => Some(width),
            BottleHold::Placed => None,
            BottleHold::Free => self.bottle_at_jaws(tip).then_some(width),
        }
    }

    fn bottle_in_box(&self) -> Option<f64> {
        let b = self.bottle();
        let p = b.pose.position();
        self.objects
            .iter()
            .filter(|o| o.role == Role::Box)
            .find_map(|o| {
                let Shape::Box { half_extents: h } = o.shape else {
                    return None;
                };
                let local = o.pose.to_local(&p);
                let top = h[2] + b.shape.half_height() + 0.05;
                let inside = local.x.abs() <= h[0]
                    && local.y.abs() <= h[1]
                    && local.z >= -h[2]
                    && local.z <= top;
                inside.then(|| o.pose.position[2] - h[2] + b.shape.half_height())
            })
    }

    /// Puts a dropped bottle back between the jaws.
    pub fn respawn_bottle(&mut self, tip: &Vector3<f64>) {
        let offset = match self.hold {
            BottleHold::Grasped { offset } | BottleHold::Respawned { offset } => offset,
            _ => Vector3::zeros(),
        };
        self.hold = BottleHold::Respawned { offset };
        self.objects[self.bottle].pose.position = (tip + offset).into();
    }

    /// Updates bottle attachment from the gripper, moves a held bottle with
    /// the gripper, and computes contacts and collisions.
    pub fn world_step(
        &mut self,
        robot: &RobotPoses,
        gripper: &GripperState,
    ) -> (ContactReport, WorldEvents) {
        let tip = robot.right_tip();
        let mut events = WorldEvents::default();
        let holding = gripper.grasp_force >= self.thresholds.f_hold;

        self.hold = match self.hold {
            BottleHold::Free if holding && self.bottle_at_jaws(&tip) => {
                events.grasped = true;
                BottleHold::Grasped {
                    offset: self.bottle().pose.position() - tip,
                }
            }
            BottleHold::Respawned { offset } if holding => {
                events.grasped = true;
                BottleHold::Grasped { offset }
            }
            BottleHold::Grasped { .. } if !holding => match self.bottle_in_box() {
                Some(rest_z) => {
                    events.released = Some(true);
                    self.objects[self.bottle].pose.position[2] = rest_z;
                    BottleHold::Placed
                }
                None => {
                    events.released = Some(false);
                    BottleHold::Free
                }
            },
            other => other,
        };
        if let BottleHold::Grasped { offset } | BottleHold::Respawned { offset } = self.hold {
            self.objects[self.bottle].pose.position = (tip + offset).into();
        }
        events.bottle_lifted = matches!(self.hold, BottleHold::Grasped { .. })
            && self.bottle().pose.position[2] > self.bottle_rest_z + self.thresholds.lift_height;

        let ball = robot.left_tip();
        let mut report = ContactReport {
            grasp_force: gripper.grasp_force,
            ..ContactReport::default()
        };
        let footprint = robot.footprint_box();
        let held = !matches!(self.hold, BottleHold::Free | BottleHold::Placed);
        for (i, obj) in self.objects.iter().enumerate() {
            if i == self.bottle && held {
                continue;
            }
            let penetration =
                (robot.ball_radius - signed_distance(&obj.shape, &obj.pose, &ball)).max(0.0);
            report.left_contact_force = report
                .left_contact_force
                .max(self.thresholds.k_c * penetration);
            if obj.role == Role::EmergencyButton {
                report.button_force = report.button_force.max(self.thresholds.k_c * penetration);
            }
            if obj.role.is_hazard() {
                let arm_hit = robot
                    .right_points
                    .iter()
                    .chain(&robot.left_points)
                    .any(|p| signed_distance(&obj.shape, &obj.pose, p) < 0.0);
                if arm_hit
                    || penetration > 0.0
                    || shape_overlaps_box(&obj.shape, &obj.pose, &footprint)
                {
                    report.collisions.push(obj.id.clone());
                }
            }
        }
        events.button_pressed = report.button_force > self.thresholds.f_press;
        events.collision = !report.collisions.is_empty();
        (report, events)
    }
}
