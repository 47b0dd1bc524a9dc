use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::UkfError;

/// Filter parameters. Defaults are the shipped hardware values:
/// `alpha = 10`, `sigma_p = 8.5`, `sigma_m = 178` N·cm per joint and additive
/// transition noise ranges of `[-3.4, 3.4]` N·cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfConfig {
    /// State dimension.
    pub dim: usize,
    /// Sigma-point spread; must exceed 1.
    pub alpha: f64,
    /// Process standard deviation per channel, N·cm.
    pub sigma_p: Vec<f64>,
    /// Measurement standard deviation per channel, N·cm.
    pub sigma_m: Vec<f64>,
    /// Additive process noise interval inside the transition, N·cm.
    pub vp_range: [f64; 2],
    /// Additive measurement noise interval inside the measurement map, N·cm.
    pub vm_range: [f64; 2],
    /// Draw `v_p`/`v_m` from their ranges inside the sigma-point maps. When
    /// false both are zero and all uncertainty is carried by `N_p`/`N_m`.
    pub literal_noise: bool,
    /// Seed of the additive-noise RNG in literal mode.
    pub noise_seed: u64,
}

impl Default for UkfConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            alpha: 10.0,
            sigma_p: vec![8.5, 8.5],
            sigma_m: vec![178.0, 178.0],
            vp_range: [-3.4, 3.4],
            vm_range: [-3.4, 3.4],
            literal_noise: false,
            noise_seed: 0,
        }
    }
}

impl UkfConfig {
    pub fn validate(&self) -> Result<(), UkfError> {
        let bad = |m: String| Err(UkfError::InvalidConfig(m));
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return bad(format!("alpha must be > 1, got {}", self.alpha));
        }
        for (name, s) in [("sigma_p", &self.sigma_p), ("sigma_m", &self.sigma_m)] {
            if s.len() != self.dim {
                return bad(format!("{name} has {} entries, dim is {}", s.len(), self.dim));
            }
            if !s.iter().all(|v| v.is_finite() && *v > 0.0) {
                return bad(format!("{name} entries must be finite and > 0"));
            }
        }
        for (name, r) in [("vp_range", self.vp_range), ("vm_range", self.vm_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] == -r[1]) {
                return bad(format!("{name} must be a finite interval symmetric about 0"));
            }
        }
        Ok(())
    }

    /// Scaling factor `(alpha^2 - 1) d`.
    pub fn lambda(&self) -> f64 {
        (self.alpha * self.alpha - 1.0) * self.dim as f64
    }

    pub fn sigma_count(&self) -> usize {
        2 * self.dim + 1
    }

    /// `diag(sigma_p ⊙ sigma_p)`.
    pub fn process_noise(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.sigma_p.iter().map(|s| s * s),
        ))
    }

    /// `diag(sigma_m ⊙ sigma_m)`.
    pub fn measurement_noise(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.sigma_m.iter().map(|s| s * s),
        ))
    }

    /// Scalar filter with the given spread and noise levels.
    pub fn scalar(alpha: f64, sigma_p: f64, sigma_m: f64) -> Self {
        Self {
            dim: 1,
            alpha,
            sigma_p: vec![sigma_p],
            sigma_m: vec![sigma_m],
            ..Self::default()
        }
    }
}
