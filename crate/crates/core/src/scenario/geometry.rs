//! Signed distances and overlap tests for spheres and yaw-rotated boxes.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
}

impl Shape {
    pub fn is_valid(&self) -> bool {
        match *self {
            Shape::Sphere { radius } => radius.is_finite() && radius > 0.0,
            Shape::Box { half_extents } => half_extents.iter().all(|h| h.is_finite() && *h > 0.0),
        }
    }

    /// Extent along the horizontal axis a gripper would close on.
    pub fn grip_width(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => 2.0 * radius,
            Shape::Box { half_extents } => 2.0 * half_extents[0].min(half_extents[1]),
        }
    }

    pub fn half_height(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents } => half_extents[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position: [f64; 3],
    #[serde(default)]
    pub heading: f64,
}

impl Pose {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    /// World point expressed in this pose's frame (yaw only).
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.position();
        let (s, c) = self.heading.sin_cos();
        Vector3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
    }
}

/// Signed distance from `p` to the surface of `shape` placed at `pose`;
/// negative inside.
pub fn signed_distance(shape: &Shape, pose: &Pose, p: &Vector3<f64>) -> f64 {
    match *shape {
        Shape::Sphere { radius } => (p - pose.position()).norm() - radius,
        Shape::Box { half_extents } => {
            let local = pose.to_local(p);
            let q = local.abs() - Vector3::from(half_extents);
            let outside = q.map(|v| v.max(0.0)).norm();
            let inside = q.max().min(0.0);
            outside + inside
        }
    }
}

/// Oriented box used for the robot base footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub pose: Pose,
    pub half_extents: [f64; 3],
}

impl OrientedBox {
    fn axes_2d(&self) -> [Vector2<f64>; 2] {
        let (s, c) = self.pose.heading.sin_cos();
        [Vector2::new(c, s), Vector2::new(-s, c)]
    }

    fn corners_2d(&self) -> [Vector2<f64>; 4] {
        let [ax, ay] = self.axes_2d();
        let c = Vector2::new(self.pose.position[0], self.pose.position[1]);
        let hx = ax * self.half_extents[0];
        let hy = ay * self.half_extents[1];
        [c + hx + hy, c + hx - hy, c - hx + hy, c - hx - hy]
    }

    fn z_range(&self) -> (f64, f64) {
        (
            self.pose.position[2] - self.half_extents[2],
            self.pose.position[2] + self.half_extents[2],
        )
    }
}

/// Strict overlap of two yaw-rotated boxes (separating axis test in the
/// plane plus a vertical interval check).
pub fn boxes_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    if a1 <= b0 || b1 <= a0 {
        return false;
    }
    let ca = a.corners_2d();
    let cb = b.corners_2d();
    for axis in a.axes_2d().into_iter().chain(b.axes_2d()) {
        let project = |cs: &[Vector2<f64>; 4]| {
            cs.iter()
                .map(|c| c.dot(&axis))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        };
        let (alo, ahi) = project(&ca);
        let (blo, bhi) = project(&cb);
        if ahi <= blo || bhi <= alo {
            return false;
        }
    }
    true
}

/// Whether `shape` at `pose` strictly overlaps the oriented box.
pub fn shape_overlaps_box(shape: &Shape, pose: &Pose, obb: &OrientedBox) -> bool {
    match *shape {
        Shape::Sphere { radius } => {
            let as_shape = Shape::Box {
                half_extents: obb.half_extents,
            };
            signed_distance(&as_shape, &obb.pose, &pose.position()) < radius
        }
        Shape::Box { half_extents } => boxes_overlap(
            &OrientedBox {
                pose: *pose,
                half_extents,
            },
            obb,
        ),
    }
}
