//! Planar two-link kinematics.
//!
//! `x = l1 cos(th) + l2 cos(th + tk)`, `z = l1 sin(th) + l2 sin(th + tk)`.

use nalgebra::Matrix2;

use super::{LegGeometry, LegSimError};
use crate::types::{FootPoint, JointState};

pub fn forward_kinematics(geom: &LegGeometry, q: &JointState) -> FootPoint {
    let (s1, c1) = q.theta_h.sin_cos();
    let (s12, c12) = (q.theta_h + q.theta_k).sin_cos();
    FootPoint::new(geom.l1 * c1 + geom.l2 * c12, geom.l1 * s1 + geom.l2 * s12)
}

/// Knee joint position.
pub fn knee_position(geom: &LegGeometry, q: &JointState) -> FootPoint {
    let (s1, c1) = q.theta_h.sin_cos();
    FootPoint::new(geom.l1 * c1, geom.l1 * s1)
}

/// Analytic foot Jacobian `d(x, z) / d(theta_h, theta_k)`, in cm/rad.
pub fn jacobian(geom: &LegGeometry, q: &JointState) -> Matrix2<f64> {
    let (s1, c1) = q.theta_h.sin_cos();
    let (s12, c12) = (q.theta_h + q.theta_k).sin_cos();
    Matrix2::new(
        -geom.l1 * s1 - geom.l2 * s12,
        -geom.l2 * s12,
        geom.l1 * c1 + geom.l2 * c12,
        geom.l2 * c12,
    )
}

/// Time derivative of the Jacobian along the joint velocities in `q`.
pub fn jacobian_rate(geom: &LegGeometry, q: &JointState) -> Matrix2<f64> {
    let (s1, c1) = q.theta_h.sin_cos();
    let (s12, c12) = (q.theta_h + q.theta_k).sin_cos();
    let w1 = q.omega_h;
    let w12 = q.omega_h + q.omega_k;
    Matrix2::new(
        -geom.l1 * c1 * w1 - geom.l2 * c12 * w12,
        -geom.l2 * c12 * w12,
        -geom.l1 * s1 * w1 - geom.l2 * s12 * w12,
        -geom.l2 * s12 * w12,
    )
}

/// Closed-form inverse kinematics on the positive-knee branch
/// (`theta_k` in `(0, pi)`).
///
/// The point must lie strictly inside the reachable annulus; the boundary
/// circles are the straight and folded singularities where the two branches
/// meet.
pub fn inverse_kinematics(geom: &LegGeometry, p: FootPoint) -> Result<(f64, f64), LegSimError> {
    let r = p.radius();
    if !p.x.is_finite() || !p.z.is_finite() || r >= geom.max_reach() || r <= geom.min_reach() {
        return Err(LegSimError::UnreachablePoint { x: p.x, z: p.z });
    }
    let cos_k = (r * r - geom.l1 * geom.l1 - geom.l2 * geom.l2) / (2.0 * geom.l1 * geom.l2);
    if !(-1.0..=1.0).contains(&cos_k) {
        return Err(LegSimError::NoIkSolution { x: p.x, z: p.z });
    }
    let theta_k = cos_k.acos();
    let theta_h = p.z.atan2(p.x)
        - (geom.l2 * theta_k.sin()).atan2(geom.l1 + geom.l2 * theta_k.cos());
    // keep the hip angle in (-pi, pi]
    let theta_h = wrap_angle(theta_h);
    if !geom.within_limits(theta_h, theta_k) {
        return Err(LegSimError::NoIkSolution { x: p.x, z: p.z });
    }
    Ok((theta_h, theta_k))
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
