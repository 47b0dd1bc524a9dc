//! Swing-phase foot path and its joint-space realisation.
//!
//! The foot follows a cycloidal progress profile `s(tau) = tau - sin(2 pi tau) / 2pi`
//! from A to B, with a half-sine lift of `apex_height` on top of the straight
//! line. The profile has zero velocity at both ends.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::kinematics::{forward_kinematics, inverse_kinematics, jacobian, jacobian_rate};
use super::{LegGeometry, LegSimError};
use crate::types::{FootPoint, JointState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Lift-off point A, cm.
    pub start: FootPoint,
    /// Touch-down point B, cm.
    pub end: FootPoint,
    /// Swing clearance above the A–B chord, cm.
    pub apex_height: f64,
    pub steps: usize,
    /// Control period, s.
    pub tick_dt: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            start: FootPoint::new(-12.0, -40.0),
            end: FootPoint::new(12.0, -40.0),
            apex_height: 8.0,
            steps: 100,
            tick_dt: 0.01,
        }
    }
}

/// One control tick of the swing: joint state plus joint accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryTick {
    pub state: JointState,
    pub accel: [f64; 2],
}

/// Foot position, velocity and acceleration in the leg plane at a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootSample {
    pub position: FootPoint,
    pub velocity: Vector2<f64>,
    pub acceleration: Vector2<f64>,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<(), LegSimError> {
        if self.steps < 2 {
            return Err(LegSimError::InvalidTrajectory("steps must be >= 2".into()));
        }
        if !(self.tick_dt.is_finite() && self.tick_dt > 0.0) {
            return Err(LegSimError::InvalidTrajectory("tick_dt must be > 0".into()));
        }
        if self.start == self.end {
            return Err(LegSimError::InvalidTrajectory("start and end coincide".into()));
        }
        if !self.apex_height.is_finite()
            || ![self.start.x, self.start.z, self.end.x, self.end.z].iter().all(|v| v.is_finite())
        {
            return Err(LegSimError::InvalidTrajectory("non-finite trajectory parameter".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        (self.steps - 1) as f64 * self.tick_dt
    }

    /// Analytic foot sample at tick `k`.
    pub fn foot_sample(&self, k: usize) -> FootSample {
        let period = self.duration();
        let tau = k as f64 / (self.steps - 1) as f64;
        let s = tau - (TAU * tau).sin() / TAU;
        let s_dot = (1.0 - (TAU * tau).cos()) / period;
        let s_ddot = TAU * (TAU * tau).sin() / (period * period);

        let dx = self.end.x - self.start.x;
        let dz = self.end.z - self.start.z;
        let h = self.apex_height;
        let lift = h * (PI * s).sin();
        let lift_d = h * PI * (PI * s).cos();
        let lift_dd = -h * PI * PI * (PI * s).sin();

        FootSample {
            position: FootPoint::new(self.start.x + dx * s, self.start.z + dz * s + lift),
            velocity: Vector2::new(dx * s_dot, (dz + lift_d) * s_dot),
            acceleration: Vector2::new(
                dx * s_ddot,
                (dz + lift_d) * s_ddot + lift_dd * s_dot * s_dot,
            ),
        }
    }
}

/// Joint-space swing trajectory on the positive-knee branch.
///
/// Joint rates follow from `qd = J^-1 pd` and accelerations from
/// `qdd = J^-1 (pdd - Jd qd)`.
pub fn generate_swing_trajectory(
    spec: &TrajectorySpec,
    geom: &LegGeometry,
) -> Result<Vec<TrajectoryTick>, LegSimError> {
    spec.validate()?;
    geom.validate()?;
    let mut ticks = Vec::with_capacity(spec.steps);
    for k in 0..spec.steps {
        let foot = spec.foot_sample(k);
        let (theta_h, theta_k) = inverse_kinematics(geom, foot.position)?;
        let rest = JointState::at_rest(theta_h, theta_k);
        let j = jacobian(geom, &rest);
        let j_inv = j
            .try_inverse()
            .ok_or(LegSimError::NoIkSolution { x: foot.position.x, z: foot.position.z })?;
        let qd = j_inv * foot.velocity;
        let state = JointState::new(theta_h, theta_k, qd.x, qd.y);
        let qdd = j_inv * (foot.acceleration - jacobian_rate(geom, &state) * qd);
        ticks.push(TrajectoryTick {
            state,
            accel: [qdd.x, qdd.y],
        });
    }
    if let Some(last) = ticks.last() {
        // guard against the IK wrapping onto another hip revolution mid-swing
        let jump = ticks
            .windows(2)
            .map(|w| (w[1].state.theta_h - w[0].state.theta_h).abs())
            .fold(0.0, f64::max);
        if jump > PI {
            let p = forward_kinematics(geom, &last.state);
            return Err(LegSimError::NoIkSolution { x: p.x, z: p.z });
        }
    }
    Ok(ticks)
}
