use serde::{Deserialize, Serialize};

use super::LegSimError;

/// Physical parameters of the two-link leg.
///
/// Lengths are in cm, masses in kg, inertias (about each link's centre of
/// mass) in kg·cm², viscous friction in N·cm·s/rad and gravity in cm/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegGeometry {
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub com1: f64,
    pub com2: f64,
    pub i1: f64,
    pub i2: f64,
    pub b_h: f64,
    pub b_k: f64,
    pub gravity: f64,
    /// Inclusive hip angle limits (rad).
    pub hip_limits: [f64; 2],
    /// Inclusive knee angle limits (rad). The default admits the positive
    /// knee branch only.
    pub knee_limits: [f64; 2],
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self::uniform_rods(25.0, 25.0, 1.2, 0.8)
    }
}

impl LegGeometry {
    /// Links modelled as uniform rods with the centre of mass at mid-link.
    pub fn uniform_rods(l1: f64, l2: f64, m1: f64, m2: f64) -> Self {
        Self {
            l1,
            l2,
            m1,
            m2,
            com1: l1 / 2.0,
            com2: l2 / 2.0,
            i1: m1 * l1 * l1 / 12.0,
            i2: m2 * l2 * l2 / 12.0,
            b_h: 0.5,
            b_k: 0.5,
            gravity: 981.0,
            hip_limits: [-std::f64::consts::PI, std::f64::consts::PI],
            knee_limits: [0.0, std::f64::consts::PI],
        }
    }

    /// Same geometry with gravity and friction switched off.
    pub fn frictionless_zero_gravity(&self) -> Self {
        Self {
            b_h: 0.0,
            b_k: 0.0,
            gravity: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), LegSimError> {
        let positive = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("m1", self.m1),
            ("m2", self.m2),
            ("com1", self.com1),
            ("com2", self.com2),
            ("i1", self.i1),
            ("i2", self.i2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(LegSimError::InvalidGeometry(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.com1 > self.l1 || self.com2 > self.l2 {
            return Err(LegSimError::InvalidGeometry(
                "centre of mass must lie on its link".into(),
            ));
        }
        for (name, v) in [("b_h", self.b_h), ("b_k", self.b_k), ("gravity", self.gravity)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LegSimError::InvalidGeometry(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, lim) in [("hip_limits", self.hip_limits), ("knee_limits", self.knee_limits)] {
            if !(lim[0].is_finite() && lim[1].is_finite() && lim[0] < lim[1]) {
                return Err(LegSimError::InvalidGeometry(format!(
                    "{name} must be an increasing finite interval"
                )));
            }
        }
        Ok(())
    }

    /// Outer radius of the reachable annulus.
    pub fn max_reach(&self) -> f64 {
        self.l1 + self.l2
    }

    /// Inner radius of the reachable annulus.
    pub fn min_reach(&self) -> f64 {
        (self.l1 - self.l2).abs()
    }

    pub fn within_limits(&self, theta_h: f64, theta_k: f64) -> bool {
        (self.hip_limits[0]..=self.hip_limits[1]).contains(&theta_h)
            && (self.knee_limits[0]..=self.knee_limits[1]).contains(&theta_k)
    }
}
