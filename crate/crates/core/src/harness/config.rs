use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::impact::ImpactConfig;
use crate::legsim::{
    ContactMode, ContactSchedule, LegGeometry, NoiseModel, TrajectorySpec, TruthSource, WorkspaceGrid,
};
use crate::mlp::{NetworkSpec, TrainConfig};
use crate::ukf::UkfConfig;

/// Everything one scenario needs, loadable from TOML.
///
/// Every section is optional and falls back to its defaults. A missing
/// `[contact]` table means no contact is injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub stop_on_collision: bool,
    /// Trained network, relative to the config file when loaded from disk.
    pub model_path: Option<PathBuf>,
    pub truth_source: TruthSource,
    pub geometry: LegGeometry,
    pub trajectory: TrajectorySpec,
    pub noise: NoiseModel,
    pub contact: Option<ContactSchedule>,
    pub ukf: UkfConfig,
    pub impact: ImpactConfig,
    pub dataset: WorkspaceGrid,
    pub network: NetworkSpec,
    pub training: TrainConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            stop_on_collision: false,
            model_path: None,
            truth_source: TruthSource::default(),
            geometry: LegGeometry::default(),
            trajectory: TrajectorySpec::default(),
            noise: NoiseModel::default(),
            contact: None,
            ukf: UkfConfig::default(),
            impact: ImpactConfig::default(),
            dataset: WorkspaceGrid::default(),
            network: NetworkSpec::default(),
            training: TrainConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Default scenario with the foot hitting an obstacle at mid-swing.
    pub fn reference() -> Self {
        Self {
            contact: Some(reference_contact()),
            ..Self::default()
        }
    }

    pub fn without_contact(&self) -> Self {
        Self {
            contact: None,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.geometry.validate()?;
        self.trajectory.validate()?;
        self.noise.validate()?;
        if let Some(c) = &self.contact {
            c.validate(self.trajectory.steps)?;
        }
        self.ukf.validate()?;
        if self.ukf.dim != 2 {
            return Err(HarnessError::Config("the leg filter needs ukf.dim = 2".into()));
        }
        self.impact.validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates; a relative `model_path` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(m) = &cfg.model_path {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.model_path = Some(base.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serialises")
    }
}

/// Obstacle at tick 50 pushing the foot back and up, N.
pub fn reference_contact() -> ContactSchedule {
    ContactSchedule {
        trigger_step: 50,
        mode: ContactMode::JacobianForce,
        magnitude: [-4.0, 3.0],
        ramp_steps: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::reference();
        let text = cfg.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_toml_str("sed = 3").is_err());
        assert!(ScenarioConfig::from_toml_str("[ukf]\nalfa = 3").is_err());
    }

    #[test]
    fn nested_invariants_checked() {
        assert!(ScenarioConfig::from_toml_str("[ukf]\nalpha = 0.5").is_err());
        let late = "[contact]\ntrigger_step = 500\nmode = \"torque-offset\"\nmagnitude = [1.0, 1.0]";
        assert!(ScenarioConfig::from_toml_str(late).is_err());
    }

    #[test]
    fn defaults_carry_table_values() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.ukf.alpha, 10.0);
        assert_eq!(cfg.ukf.sigma_p, vec![8.5, 8.5]);
        assert_eq!(cfg.ukf.sigma_m, vec![178.0, 178.0]);
        assert_eq!(cfg.ukf.vp_range, [-3.4, 3.4]);
        assert_eq!(cfg.impact.t_threshold, [1.0, 1.0]);
        assert_eq!(cfg.noise.fraction, 0.10);
        assert_eq!(cfg.trajectory.steps, 100);
    }
}
