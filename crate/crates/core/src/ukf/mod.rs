//! Unscented Kalman filter over the joint torque vector.
//!
//! The state is the filtered torque `T_f` with covariance `C_p`. Each tick
//! the network prediction for the current joint state drives the transition
//! and the measured torque corrects it; see [`step`] for the maps involved.

mod config;
mod sigma;
pub mod step;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mlp::Network;
use crate::types::{JointState, TorqueVector};

pub use config::UkfConfig;
pub use sigma::{regularized_cholesky, sigma_points, ut_weights, SigmaSet};
pub use step::{
    filter_step, filter_step_with_prediction, measure, predict, transition_g, unscented_transform,
    update, AdditiveNoise, Propagated, StepTrace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UkfError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("covariance is not positive semidefinite, even after regularisation")]
    CovarianceNotPsd,
    #[error("innovation covariance is numerically singular")]
    SingularInnovationCovariance,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("filter state became non-finite")]
    NonFinite,
}

/// No-load torque model queried by the transition.
pub trait TorquePredictor {
    fn predict_torque(&self, p: &JointState) -> TorqueVector;
}

impl TorquePredictor for Network {
    fn predict_torque(&self, p: &JointState) -> TorqueVector {
        Network::predict_torque(self, p)
    }
}

impl<F: Fn(&JointState) -> TorqueVector> TorquePredictor for F {
    fn predict_torque(&self, p: &JointState) -> TorqueVector {
        self(p)
    }
}

/// Filtered torque and its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct UkfState {
    pub t_f: DVector<f64>,
    pub c_p: DMatrix<f64>,
}

impl UkfState {
    pub fn new(t_f: DVector<f64>, c_p: DMatrix<f64>) -> Self {
        Self { t_f, c_p }
    }

    /// Start-of-trajectory state: `T_f` is the prediction at the start point
    /// and `C_p` the process noise matrix.
    pub fn initial(t_p0: &DVector<f64>, cfg: &UkfConfig) -> Self {
        Self::new(t_p0.clone(), cfg.process_noise())
    }

    pub fn torque(&self) -> TorqueVector {
        TorqueVector::from_dvector(&self.t_f)
    }

    /// Smallest eigenvalue of the (symmetric) covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.c_p + self.c_p.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Sequential filter for one torque stream.
#[derive(Debug, Clone)]
pub struct UnscentedFilter {
    cfg: UkfConfig,
    state: UkfState,
    rng: ChaCha8Rng,
}

impl UnscentedFilter {
    pub fn new(cfg: UkfConfig, initial: UkfState) -> Result<Self, UkfError> {
        cfg.validate()?;
        if initial.t_f.len() != cfg.dim || initial.c_p.shape() != (cfg.dim, cfg.dim) {
            return Err(UkfError::DimMismatch("initial state does not match dim".into()));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.noise_seed),
            cfg,
            state: initial,
        })
    }

    /// Filter initialised at the prediction for the start joint state.
    pub fn start(
        cfg: UkfConfig,
        start: &JointState,
        predictor: &dyn TorquePredictor,
    ) -> Result<Self, UkfError> {
        let t_p0 = predictor.predict_torque(start).to_dvector();
        let initial = UkfState::initial(&t_p0, &cfg);
        Self::new(cfg, initial)
    }

    pub fn config(&self) -> &UkfConfig {
        &self.cfg
    }

    pub fn state(&self) -> &UkfState {
        &self.state
    }

    pub fn step_with_prediction(
        &mut self,
        t_p: &DVector<f64>,
        t_m: &DVector<f64>,
    ) -> Result<StepTrace, UkfError> {
        let noise = if self.cfg.literal_noise {
            AdditiveNoise::Uniform(&mut self.rng)
        } else {
            AdditiveNoise::Off
        };
        let (next, trace) = filter_step_with_prediction(&self.state, t_p, t_m, &self.cfg, noise)?;
        self.state = next;
        Ok(trace)
    }

    /// Returns the prediction used together with the step trace.
    pub fn step(
        &mut self,
        p_r: &JointState,
        t_m: TorqueVector,
        predictor: &dyn TorquePredictor,
    ) -> Result<(TorqueVector, StepTrace), UkfError> {
        let t_p = predictor.predict_torque(p_r);
        let trace = self.step_with_prediction(&t_p.to_dvector(), &t_m.to_dvector())?;
        Ok((t_p, trace))
    }
}
