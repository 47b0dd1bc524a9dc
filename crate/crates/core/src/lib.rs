//! Force-sensor-free impact intensity estimation for a two-link robot leg.
//!
//! A feedforward network predicts the no-load joint torques from the joint
//! state, an unscented Kalman filter smooths the measured torques using that
//! prediction as its transition model, and the residual between the two is
//! mapped through the link lever arms into a per-joint impact intensity.
//!
//! * [`legsim`] synthetic leg plant, swing trajectory and training data.
//! * [`mlp`] torque predictor network, trainer and model file format.
//! * [`ukf`] the torque filter.
//! * [`impact`] residual thresholding, force mapping and collision latching.
//! * [`harness`] scenario configuration, run loop, calibration and reports.

pub mod harness;
pub mod impact;
pub mod legsim;
pub mod mlp;
mod types;
pub mod ukf;

pub use types::{FootPoint, JointState, TorqueVector};
