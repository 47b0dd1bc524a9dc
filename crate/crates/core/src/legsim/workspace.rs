//! No-load training data: an even joint-angle grid over the operating region
//! of the leg, crossed with a set of constant joint velocities.

use serde::{Deserialize, Serialize};

use super::dynamics::inverse_dynamics;
use super::kinematics::forward_kinematics;
use super::{LegGeometry, LegSimError};
use crate::mlp::{Dataset, SplitFractions};
use crate::types::JointState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceGrid {
    /// Inclusive hip angle span, rad.
    pub hip_range: [f64; 2],
    /// Inclusive knee angle span, rad.
    pub knee_range: [f64; 2],
    pub hip_points: usize,
    pub knee_points: usize,
    /// Grid points whose foot sits above this height (cm) are outside the
    /// operating region and skipped.
    pub max_foot_z: f64,
    /// Constant hip rates, rad/s.
    pub hip_velocities: Vec<f64>,
    /// Constant knee rates, rad/s.
    pub knee_velocities: Vec<f64>,
}

impl Default for WorkspaceGrid {
    /// 809 admissible grid points times 4 x 3 velocity levels: 9708 samples.
    fn default() -> Self {
        Self {
            hip_range: [-2.9, -1.3],
            knee_range: [0.7, 2.3],
            hip_points: 30,
            knee_points: 33,
            max_foot_z: -21.0,
            hip_velocities: vec![-2.4, -0.8, 0.8, 2.4],
            knee_velocities: vec![-2.5, 0.0, 2.5],
        }
    }
}

impl WorkspaceGrid {
    pub fn validate(&self) -> Result<(), LegSimError> {
        let bad = |m: &str| Err(LegSimError::InvalidGrid(m.into()));
        if self.hip_points == 0 || self.knee_points == 0 {
            return bad("grid needs at least one point per axis");
        }
        if self.hip_velocities.is_empty() || self.knee_velocities.is_empty() {
            return bad("at least one velocity level per joint");
        }
        for r in [self.hip_range, self.knee_range] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad("angle ranges must be finite and ordered");
            }
        }
        if !self
            .hip_velocities
            .iter()
            .chain(&self.knee_velocities)
            .all(|v| v.is_finite())
        {
            return bad("velocity levels must be finite");
        }
        Ok(())
    }

    /// Admissible (theta_h, theta_k) grid points in row-major order.
    pub fn angle_points(&self, geom: &LegGeometry) -> Vec<(f64, f64)> {
        let axis = |r: [f64; 2], n: usize| -> Vec<f64> {
            if n == 1 {
                vec![r[0]]
            } else {
                (0..n)
                    .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let hips = axis(self.hip_range, self.hip_points);
        let knees = axis(self.knee_range, self.knee_points);
        let mut out = Vec::with_capacity(hips.len() * knees.len());
        for &th in &hips {
            for &tk in &knees {
                let foot = forward_kinematics(geom, &JointState::at_rest(th, tk));
                if foot.z <= self.max_foot_z {
                    out.push((th, tk));
                }
            }
        }
        out
    }

    /// Number of samples `sample_workspace` produces.
    pub fn sample_count(&self, geom: &LegGeometry) -> usize {
        self.angle_points(geom).len() * self.hip_velocities.len() * self.knee_velocities.len()
    }
}

/// Builds the no-load dataset: inverse-dynamics torques at zero joint
/// acceleration, then a seeded 70/15/15 split.
pub fn sample_workspace(
    geom: &LegGeometry,
    grid: &WorkspaceGrid,
    seed: u64,
) -> Result<Dataset, LegSimError> {
    geom.validate()?;
    grid.validate()?;
    let mut samples = Vec::with_capacity(grid.sample_count(geom));
    for (th, tk) in grid.angle_points(geom) {
        for &wh in &grid.hip_velocities {
            for &wk in &grid.knee_velocities {
                let q = JointState::new(th, tk, wh, wk);
                samples.push((q, inverse_dynamics(geom, &q, [0.0, 0.0])));
            }
        }
    }
    if samples.is_empty() {
        return Err(LegSimError::InvalidGrid("grid yields no admissible samples".into()));
    }
    let mut data = Dataset::from_torque_samples(&samples)
        .map_err(|e| LegSimError::InvalidGrid(e.to_string()))?;
    data.assign_splits(seed, SplitFractions::default())
        .map_err(|e| LegSimError::InvalidGrid(e.to_string()))?;
    Ok(data)
}
