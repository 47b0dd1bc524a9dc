//! Synthetic two-link leg standing in for the physical robot.

mod dynamics;
mod geometry;
mod kinematics;
mod plant;
mod trajectory;
mod workspace;

use thiserror::Error;

pub use dynamics::{coriolis_torque, gravity_torque, inverse_dynamics, mass_matrix, RIGID_BODY_TO_NCM};
pub use geometry::LegGeometry;
pub use kinematics::{forward_kinematics, inverse_kinematics, jacobian, jacobian_rate, knee_position};
pub use plant::{ContactMode, ContactSchedule, NoiseModel, Plant, PlantOutput, TruthSource};
pub use trajectory::{generate_swing_trajectory, FootSample, TrajectorySpec, TrajectoryTick};
pub use workspace::{sample_workspace, WorkspaceGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LegSimError {
    #[error("invalid leg geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid contact schedule: {0}")]
    InvalidContact(String),
    #[error("invalid noise fraction {0}")]
    InvalidNoise(f64),
    #[error("invalid workspace grid: {0}")]
    InvalidGrid(String),
    #[error("foot point ({x}, {z}) is outside the reachable annulus")]
    UnreachablePoint { x: f64, z: f64 },
    #[error("no positive-knee inverse kinematics solution at ({x}, {z})")]
    NoIkSolution { x: f64, z: f64 },
}
