//! Value types shared by every stage of the pipeline.
//!
//! Angles are measured from the +x axis of the leg plane, positive
//! counterclockwise. The leg plane is `x` (forward) by `z` (up); the hip axis
//! sits at the origin and gravity points along `-z`. Every module uses this
//! convention.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

/// Joint-space control state `[theta_h, theta_k, omega_h, omega_k]` at one tick.
///
/// `theta_k` is the knee angle relative to link 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub theta_h: f64,
    pub theta_k: f64,
    pub omega_h: f64,
    pub omega_k: f64,
}

impl JointState {
    pub const fn new(theta_h: f64, theta_k: f64, omega_h: f64, omega_k: f64) -> Self {
        Self {
            theta_h,
            theta_k,
            omega_h,
            omega_k,
        }
    }

    /// Static configuration (zero velocity).
    pub const fn at_rest(theta_h: f64, theta_k: f64) -> Self {
        Self::new(theta_h, theta_k, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta_h, self.theta_k, self.omega_h, self.omega_k]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn angles(&self) -> Vector2<f64> {
        Vector2::new(self.theta_h, self.theta_k)
    }

    pub fn velocities(&self) -> Vector2<f64> {
        Vector2::new(self.omega_h, self.omega_k)
    }
}

/// Hip/knee torque pair in N·cm.
///
/// The same type carries the measured, predicted and filtered torques.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorqueVector {
    pub hip: f64,
    pub knee: f64,
}

impl TorqueVector {
    pub const ZERO: Self = Self::new(0.0, 0.0);

    pub const fn new(hip: f64, knee: f64) -> Self {
        Self { hip, knee }
    }

    pub fn abs(self) -> Self {
        Self::new(self.hip.abs(), self.knee.abs())
    }

    pub fn max_component(self) -> f64 {
        self.hip.max(self.knee)
    }

    pub fn norm(self) -> f64 {
        self.hip.hypot(self.knee)
    }

    pub fn is_finite(&self) -> bool {
        self.hip.is_finite() && self.knee.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.hip, self.knee]
    }

    pub fn to_dvector(self) -> DVector<f64> {
        DVector::from_column_slice(&self.to_array())
    }

    /// Panics unless `v` has exactly two entries.
    pub fn from_dvector(v: &DVector<f64>) -> Self {
        assert_eq!(v.len(), 2, "torque vectors are two-dimensional");
        Self::new(v[0], v[1])
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.hip), f(self.knee))
    }
}

impl From<Vector2<f64>> for TorqueVector {
    fn from(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

impl From<TorqueVector> for Vector2<f64> {
    fn from(t: TorqueVector) -> Self {
        Vector2::new(t.hip, t.knee)
    }
}

impl Add for TorqueVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.hip + rhs.hip, self.knee + rhs.knee)
    }
}

impl Sub for TorqueVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.hip - rhs.hip, self.knee - rhs.knee)
    }
}

impl Neg for TorqueVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hip, -self.knee)
    }
}

impl Mul<f64> for TorqueVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.hip * k, self.knee * k)
    }
}

impl fmt::Display for TorqueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.hip, self.knee)
    }
}

/// Point in the leg plane, cm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootPoint {
    pub x: f64,
    pub z: f64,
}

impl FootPoint {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn distance(self, other: FootPoint) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }

    pub fn radius(self) -> f64 {
        self.x.hypot(self.z)
    }
}
