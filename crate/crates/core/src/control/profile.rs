//! Control profile: admittance parameters, rope law, base gains and tick period.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::ControlError;

/// The shipped `centauro_paper` profile (zero joint
/// stiffness, zero vertical base gain).
pub const CENTAURO_PAPER_PROFILE: &str = include_str!("../../../../profiles/centauro_paper.json");

/// Diagonal mass-spring-damper model of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceParams {
    pub mass: DVector<f64>,
    pub stiffness: DVector<f64>,
    pub damping: DVector<f64>,
    pub q_eq: DVector<f64>,
}

impl AdmittanceParams {
    pub fn new(
        mass: DVector<f64>,
        stiffness: DVector<f64>,
        damping: DVector<f64>,
        q_eq: DVector<f64>,
    ) -> Result<Self, ControlError> {
        let n = mass.len();
        for (what, v) in [("K", &stiffness), ("D", &damping), ("q_eq", &q_eq)] {
            if v.len() != n {
                return Err(ControlError::Dimension {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if n == 0 {
            return Err(ControlError::InvalidParams(
                "admittance model has no joints".into(),
            ));
        }
        if !mass.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(ControlError::InvalidParams(
                "every M entry must be > 0".into(),
            ));
        }
        if !damping.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(ControlError::InvalidParams(
                "every D entry must be > 0".into(),
            ));
        }
        if !stiffness.iter().all(|k| k.is_finite() && *k >= 0.0) {
            return Err(ControlError::InvalidParams(
                "every K entry must be >= 0".into(),
            ));
        }
        if !q_eq.iter().all(|q| q.is_finite()) {
            return Err(ControlError::NonFinite("q_eq"));
        }
        Ok(Self {
            mass,
            stiffness,
            damping,
            q_eq,
        })
    }

    pub fn dof(&self) -> usize {
        self.mass.len()
    }
}

/// Spring-with-deadzone law turning wrist displacement into a rope force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeParams {
    /// N/m
    pub gain: f64,
    /// m
    pub deadzone: f64,
    /// Force saturation in N.
    pub f_max: f64,
}

impl Default for RopeParams {
    fn default() -> Self {
        Self {
            gain: 50.0,
            deadzone: 0.02,
            f_max: 20.0,
        }
    }
}

/// Diagonal force-to-velocity gains of the base, in (m/s)/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGains {
    pub k_cart: Vector3<f64>,
    /// Componentwise velocity saturation, m/s.
    pub v_max: f64,
}

impl CartesianGains {
    pub fn new(k_cart: [f64; 3], v_max: f64) -> Result<Self, ControlError> {
        if !k_cart.iter().all(|k| k.is_finite() && *k >= 0.0) {
            return Err(ControlError::InvalidParams(
                "K_cart entries must be >= 0".into(),
            ));
        }
        if v_max.is_nan() || v_max <= 0.0 {
            return Err(ControlError::InvalidParams("v_max must be > 0".into()));
        }
        Ok(Self {
            k_cart: Vector3::from(k_cart),
            v_max,
        })
    }
}

/// Admittance reference of one arm: joint position, velocity and
/// acceleration references.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub q_ref: DVector<f64>,
    pub q_dot_ref: DVector<f64>,
    pub q_ddot_ref: DVector<f64>,
}

impl ReferenceState {
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q_ref: q,
            q_dot_ref: DVector::zeros(n),
            q_ddot_ref: DVector::zeros(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.q_ref.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q_ref
            .iter()
            .chain(self.q_dot_ref.iter())
            .chain(self.q_ddot_ref.iter())
            .all(|v| v.is_finite())
    }
}

/// On-disk control profile. The same joint parameters apply to both arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlProfile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "M")]
    pub mass: Vec<f64>,
    #[serde(rename = "K")]
    pub stiffness: Vec<f64>,
    #[serde(rename = "D")]
    pub damping: Vec<f64>,
    pub q_eq: Vec<f64>,
    #[serde(rename = "K_f")]
    pub rope_gain: f64,
    pub deadzone: f64,
    #[serde(rename = "K_cart")]
    pub k_cart: [f64; 3],
    pub dt: f64,
    pub f_max: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    /// First-order tracking lag of the simulated joints, seconds. Perfect
    /// tracking when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking_tau: Option<f64>,
}

fn default_v_max() -> f64 {
    1.0
}

impl ControlProfile {
    pub fn from_json(text: &str) -> Result<Self, ControlError> {
        let profile: ControlProfile = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn centauro_paper() -> Self {
        Self::from_json(CENTAURO_PAPER_PROFILE).expect("shipped profile is valid")
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        self.admittance()?;
        self.cartesian_gains()?;
        self.rope()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ControlError::InvalidParams("dt must be > 0".into()));
        }
        if let Some(tau) = self.tracking_tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(ControlError::InvalidParams(
                    "tracking_tau must be > 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn admittance(&self) -> Result<AdmittanceParams, ControlError> {
        AdmittanceParams::new(
            DVector::from_column_slice(&self.mass),
            DVector::from_column_slice(&self.stiffness),
            DVector::from_column_slice(&self.damping),
            DVector::from_column_slice(&self.q_eq),
        )
    }

    pub fn cartesian_gains(&self) -> Result<CartesianGains, ControlError> {
        CartesianGains::new(self.k_cart, self.v_max)
    }

    pub fn rope(&self) -> Result<RopeParams, ControlError> {
        let rope = RopeParams {
            gain: self.rope_gain,
            deadzone: self.deadzone,
            f_max: self.f_max,
        };
        if !(rope.gain.is_finite() && rope.gain > 0.0) {
            return Err(ControlError::InvalidParams("K_f must be > 0".into()));
        }
        if !(rope.deadzone.is_finite() && rope.deadzone >= 0.0) {
            return Err(ControlError::InvalidParams("deadzone must be >= 0".into()));
        }
        if rope.f_max.is_nan() || rope.f_max <= 0.0 {
            return Err(ControlError::InvalidParams("f_max must be > 0".into()));
        }
        Ok(rope)
    }
}
