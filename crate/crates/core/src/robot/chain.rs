//! Serial chains of revolute joints.
//!
//! Each link rotates about its joint axis (expressed in the frame of the
//! previous link) and then translates by its offset, so the terminal point of
//! the chain sits at the end of the last offset.

use nalgebra::{
    DVector, Isometry3, Matrix3xX, Point3, Translation3, Unit, UnitQuaternion, Vector3,
};

use super::ModelError;

const AXIS_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub axis: Unit<Vector3<f64>>,
    pub offset: Vector3<f64>,
}

/// An ordered list of revolute links hanging off a fixed base transform.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    links: Vec<Link>,
    base: Isometry3<f64>,
}

impl KinematicChain {
    /// Builds a chain, checking that every axis has unit norm and every offset
    /// is finite.
    pub fn new(
        base: Isometry3<f64>,
        links: impl IntoIterator<Item = ([f64; 3], [f64; 3])>,
    ) -> Result<Self, ModelError> {
        let mut out = Vec::new();
        for (index, (axis, offset)) in links.into_iter().enumerate() {
            let axis = Vector3::from(axis);
            let offset = Vector3::from(offset);
            if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                return Err(ModelError::NonUnitAxis {
                    link: index,
                    norm: axis.norm(),
                });
            }
            if !offset.iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFinite("link offset"));
            }
            out.push(Link {
                axis: Unit::new_unchecked(axis),
                offset,
            });
        }
        if out.is_empty() {
            return Err(ModelError::EmptyChain);
        }
        Ok(Self { links: out, base })
    }

    /// Number of joints.
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn base(&self) -> &Isometry3<f64> {
        &self.base
    }

    fn check_dim(&self, q: &[f64]) -> Result<(), ModelError> {
        if q.len() != self.dof() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Position of the terminal point in the robot-base frame.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Vector3<f64>, ModelError> {
        self.check_dim(q)?;
        let mut frame = self.base;
        for (link, &angle) in self.links.iter().zip(q) {
            frame *= link_transform(link, angle);
        }
        Ok(frame.translation.vector)
    }

    /// Joint origins followed by the terminal point, all in the robot-base
    /// frame. Used for collision sampling along the arm.
    pub fn joint_points(&self, q: &[f64]) -> Result<Vec<Vector3<f64>>, ModelError> {
        self.check_dim(q)?;
        let mut frame = self.base;
        let mut points = Vec::with_capacity(self.dof() + 1);
        for (link, &angle) in self.links.iter().zip(q) {
            points.push(frame.translation.vector);
            frame *= link_transform(link, angle);
        }
        points.push(frame.translation.vector);
        Ok(points)
    }

    /// Position Jacobian of the terminal point (3 x N). Column `j` is
    /// `a_j x (p_ee - p_j)` with the joint axis and origin in the base frame.
    pub fn jacobian(&self, q: &[f64]) -> Result<Matrix3xX<f64>, ModelError> {
        self.check_dim(q)?;
        let mut frame = self.base;
        let mut axes = Vec::with_capacity(self.dof());
        let mut origins = Vec::with_capacity(self.dof());
        for (link, &angle) in self.links.iter().zip(q) {
            axes.push(frame.rotation * link.axis.into_inner());
            origins.push(frame.translation.vector);
            frame *= link_transform(link, angle);
        }
        let tip = frame.translation.vector;
        let mut jac = Matrix3xX::zeros(self.dof());
        for (j, (axis, origin)) in axes.iter().zip(&origins).enumerate() {
            jac.set_column(j, &axis.cross(&(tip - origin)));
        }
        Ok(jac)
    }
}

fn link_transform(link: &Link, angle: f64) -> Isometry3<f64> {
    let rotation = UnitQuaternion::from_axis_angle(&link.axis, angle);
    Isometry3::from_parts(Translation3::identity(), rotation) * Translation3::from(link.offset)
}

/// Joint positions and velocities of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub q_dot: DVector<f64>,
}

impl JointState {
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            q_dot: DVector::zeros(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q
            .iter()
            .chain(self.q_dot.iter())
            .all(|v| v.is_finite())
    }
}

/// Transforms a point given in the robot-base frame into the world, for a
/// base at `position` with yaw `heading`.
pub fn base_to_world(position: &Vector3<f64>, heading: f64, local: &Vector3<f64>) -> Vector3<f64> {
    let iso = Isometry3::new(*position, Vector3::z() * heading);
    (iso * Point3::from(*local)).coords
}
