//! Synthetic leg plant: true torques, injected contact and noisy measurement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::inverse_dynamics;
use super::kinematics::jacobian;
use super::trajectory::TrajectoryTick;
use super::{LegGeometry, LegSimError};
use crate::types::{JointState, TorqueVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactMode {
    /// `magnitude` is a hip/knee torque pair (N·cm) added directly.
    TorqueOffset,
    /// `magnitude` is a world-frame (x, z) force on the foot (N), mapped
    /// through `J^T`.
    JacobianForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSchedule {
    pub trigger_step: usize,
    pub mode: ContactMode,
    pub magnitude: [f64; 2],
    #[serde(default = "default_ramp")]
    pub ramp_steps: usize,
}

fn default_ramp() -> usize {
    1
}

impl ContactSchedule {
    pub fn validate(&self, steps: usize) -> Result<(), LegSimError> {
        if self.trigger_step >= steps {
            return Err(LegSimError::InvalidContact(format!(
                "trigger_step {} is past the last tick {}",
                self.trigger_step,
                steps.saturating_sub(1)
            )));
        }
        if self.ramp_steps < 1 {
            return Err(LegSimError::InvalidContact("ramp_steps must be >= 1".into()));
        }
        if !self.magnitude.iter().all(|v| v.is_finite()) {
            return Err(LegSimError::InvalidContact("magnitude must be finite".into()));
        }
        Ok(())
    }

    /// Fraction of the full contact applied at `tick`, in `[0, 1]`.
    pub fn ramp_factor(&self, tick: usize) -> f64 {
        if tick < self.trigger_step {
            0.0
        } else {
            ((tick - self.trigger_step + 1) as f64 / self.ramp_steps as f64).min(1.0)
        }
    }

    /// Same schedule with the contact magnitude scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            magnitude: [self.magnitude[0] * k, self.magnitude[1] * k],
            ..self.clone()
        }
    }

    /// Joint torque produced by the contact at tick `tick` (N·cm).
    pub fn joint_torque(&self, geom: &LegGeometry, q: &JointState, tick: usize) -> TorqueVector {
        let ramp = self.ramp_factor(tick);
        if ramp == 0.0 {
            return TorqueVector::ZERO;
        }
        let full = match self.mode {
            ContactMode::TorqueOffset => TorqueVector::new(self.magnitude[0], self.magnitude[1]),
            ContactMode::JacobianForce => {
                let f = nalgebra::Vector2::new(self.magnitude[0], self.magnitude[1]);
                TorqueVector::from(jacobian(geom, q).transpose() * f)
            }
        };
        full * ramp
    }
}

/// Multiplicative measurement noise `measured = true * (1 + u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Noise amplitude as a fraction of the value (0.10 = 10 %).
    pub fraction: f64,
    /// `u ~ U[-fraction, fraction]` instead of the default one-sided
    /// `u ~ U[0, fraction]`.
    pub symmetric: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            fraction: 0.10,
            symmetric: false,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            fraction: 0.0,
            symmetric: false,
        }
    }

    pub fn validate(&self) -> Result<(), LegSimError> {
        if !(self.fraction.is_finite() && self.fraction >= 0.0) {
            return Err(LegSimError::InvalidNoise(self.fraction));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.fraction == 0.0 {
            return 0.0;
        }
        let lo = if self.symmetric { -self.fraction } else { 0.0 };
        rng.random_range(lo..=self.fraction)
    }
}

/// Where the no-contact torque of the plant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthSource {
    /// The torque predictor's own output is treated as ground truth and the
    /// measurement emulated from it.
    #[default]
    Predictor,
    /// Rigid-body inverse dynamics along the trajectory.
    Dynamics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantOutput {
    pub state: JointState,
    pub torque_true: TorqueVector,
    pub torque_measured: TorqueVector,
    pub contact_active: bool,
}

/// Stateful plant: a seeded RNG driving the measurement noise. Outputs depend
/// only on the seed and the sequence of calls.
#[derive(Debug, Clone)]
pub struct Plant {
    geom: LegGeometry,
    contact: Option<ContactSchedule>,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(
        geom: LegGeometry,
        contact: Option<ContactSchedule>,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self, LegSimError> {
        geom.validate()?;
        noise.validate()?;
        Ok(Self {
            geom,
            contact,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn geometry(&self) -> &LegGeometry {
        &self.geom
    }

    /// Advance one tick with rigid-body inverse dynamics as the no-load torque.
    pub fn step(&mut self, k: usize, tick: &TrajectoryTick) -> PlantOutput {
        let base = inverse_dynamics(&self.geom, &tick.state, tick.accel);
        self.step_with_base(k, &tick.state, base)
    }

    /// Advance one tick around an externally supplied no-load torque.
    pub fn step_with_base(&mut self, k: usize, q: &JointState, base: TorqueVector) -> PlantOutput {
        let (contact_torque, contact_active) = match &self.contact {
            Some(c) => (c.joint_torque(&self.geom, q, k), k >= c.trigger_step),
            None => (TorqueVector::ZERO, false),
        };
        let torque_true = base + contact_torque;
        let u_h = self.noise.draw(&mut self.rng);
        let u_k = self.noise.draw(&mut self.rng);
        PlantOutput {
            state: *q,
            torque_true,
            torque_measured: TorqueVector::new(
                torque_true.hip * (1.0 + u_h),
                torque_true.knee * (1.0 + u_k),
            ),
            contact_active,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legsim::trajectory::{generate_swing_trajectory, TrajectorySpec};

    fn ticks() -> Vec<TrajectoryTick> {
        generate_swing_trajectory(&TrajectorySpec::default(), &LegGeometry::default()).unwrap()
    }

    #[test]
    fn noiseless_no_contact_measures_truth() {
        let mut plant = Plant::new(LegGeometry::default(), None, NoiseModel::none(), 3).unwrap();
        for (k, t) in ticks().iter().enumerate() {
            let out = plant.step(k, t);
            assert_eq!(out.torque_measured, out.torque_true);
            assert!(!out.contact_active);
        }
    }

    #[test]
    fn ten_percent_noise_is_one_sided_and_bounded() {
        let mut plant = Plant::new(LegGeometry::default(), None, NoiseModel::default(), 9).unwrap();
        let mut seen_above_half = false;
        for (k, t) in ticks().iter().enumerate() {
            let out = plant.step(k, t);
            for (m, tr) in out.torque_measured.to_array().iter().zip(out.torque_true.to_array()) {
                if tr != 0.0 {
                    let u = m / tr - 1.0;
                    assert!((-1e-12..=0.10 + 1e-12).contains(&u), "u = {u}");
                    seen_above_half |= u > 0.05;
                }
            }
        }
        assert!(seen_above_half);
    }

    #[test]
    fn symmetric_noise_goes_both_ways() {
        let noise = NoiseModel {
            fraction: 0.1,
            symmetric: true,
        };
        let mut plant = Plant::new(LegGeometry::default(), None, noise, 9).unwrap();
        let mut neg = false;
        for (k, t) in ticks().iter().enumerate() {
            let out = plant.step(k, t);
            let u = out.torque_measured.hip / out.torque_true.hip - 1.0;
            assert!(u.abs() <= 0.1 + 1e-12);
            neg |= u < 0.0;
        }
        assert!(neg);
    }

    #[test]
    fn jacobian_force_on_straight_leg_matches_fd_jacobian() {
        let g = LegGeometry::default();
        let q = JointState::at_rest(-1.0, 0.0);
        let schedule = ContactSchedule {
            trigger_step: 0,
            mode: ContactMode::JacobianForce,
            magnitude: [0.0, -10.0],
            ramp_steps: 1,
        };
        let tau = schedule.joint_torque(&g, &q, 0);
        // J^T F with a central-difference Jacobian of forward kinematics
        let h = 1e-6;
        let fk = |th: f64, tk: f64| {
            crate::legsim::forward_kinematics(&g, &JointState::at_rest(th, tk))
        };
        let dz_dh = (fk(-1.0 + h, 0.0).z - fk(-1.0 - h, 0.0).z) / (2.0 * h);
        let dz_dk = (fk(-1.0, h).z - fk(-1.0, -h).z) / (2.0 * h);
        assert!((tau.hip - dz_dh * -10.0).abs() < 1e-4);
        assert!((tau.knee - dz_dk * -10.0).abs() < 1e-4);
    }

    #[test]
    fn contact_ramps_to_full_magnitude() {
        let s = ContactSchedule {
            trigger_step: 10,
            mode: ContactMode::TorqueOffset,
            magnitude: [4.0, 8.0],
            ramp_steps: 4,
        };
        assert_eq!(s.ramp_factor(9), 0.0);
        assert_eq!(s.ramp_factor(10), 0.25);
        assert_eq!(s.ramp_factor(13), 1.0);
        assert_eq!(s.ramp_factor(50), 1.0);
        let tau = s.joint_torque(&LegGeometry::default(), &JointState::default(), 11);
        assert_eq!(tau, TorqueVector::new(2.0, 4.0));
    }

    #[test]
    fn schedule_validation() {
        let mut s = ContactSchedule {
            trigger_step: 100,
            mode: ContactMode::TorqueOffset,
            magnitude: [1.0, 1.0],
            ramp_steps: 1,
        };
        assert!(s.validate(100).is_err());
        s.trigger_step = 50;
        assert!(s.validate(100).is_ok());
        s.ramp_steps = 0;
        assert!(s.validate(100).is_err());
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let run = |seed| {
            let mut plant =
                Plant::new(LegGeometry::default(), None, NoiseModel::default(), seed).unwrap();
            ticks()
                .iter()
                .enumerate()
                .map(|(k, t)| plant.step(k, t).torque_measured.to_array().map(f64::to_bits))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }
}
