//! Rigid-body inverse dynamics of the planar 2R leg.
//!
//! `tau = M(q) qdd + C(q, qd) qd + G(q) + B qd`. Mass, Coriolis and gravity
//! terms come out in kg·cm²/s² and are converted to N·cm (1 N·cm = 100
//! kg·cm²/s²); the viscous term is already in N·cm.

use nalgebra::{Matrix2, Vector2};

use super::LegGeometry;
use crate::types::{JointState, TorqueVector};

/// kg·cm²/s² per N·cm.
pub const RIGID_BODY_TO_NCM: f64 = 100.0;

/// Joint-space mass matrix, kg·cm².
pub fn mass_matrix(geom: &LegGeometry, theta_k: f64) -> Matrix2<f64> {
    let c2 = theta_k.cos();
    let m2_l1_c = geom.m2 * geom.l1 * geom.com2;
    let m22 = geom.i2 + geom.m2 * geom.com2 * geom.com2;
    let m11 = geom.i1
        + geom.m1 * geom.com1 * geom.com1
        + geom.m2 * geom.l1 * geom.l1
        + m22
        + 2.0 * m2_l1_c * c2;
    let m12 = m22 + m2_l1_c * c2;
    Matrix2::new(m11, m12, m12, m22)
}

/// Coriolis and centrifugal torques, kg·cm²/s².
pub fn coriolis_torque(geom: &LegGeometry, q: &JointState) -> Vector2<f64> {
    let h = geom.m2 * geom.l1 * geom.com2 * q.theta_k.sin();
    Vector2::new(
        -h * (2.0 * q.omega_h * q.omega_k + q.omega_k * q.omega_k),
        h * q.omega_h * q.omega_h,
    )
}

/// Gravity torques, kg·cm²/s².
pub fn gravity_torque(geom: &LegGeometry, q: &JointState) -> Vector2<f64> {
    let g = geom.gravity;
    let c1 = q.theta_h.cos();
    let c12 = (q.theta_h + q.theta_k).cos();
    let knee = geom.m2 * geom.com2 * g * c12;
    Vector2::new((geom.m1 * geom.com1 + geom.m2 * geom.l1) * g * c1 + knee, knee)
}

/// Joint torques (N·cm) required to realise `accel` (rad/s²) at state `q`.
pub fn inverse_dynamics(geom: &LegGeometry, q: &JointState, accel: [f64; 2]) -> TorqueVector {
    let qdd = Vector2::new(accel[0], accel[1]);
    let rigid = mass_matrix(geom, q.theta_k) * qdd + coriolis_torque(geom, q) + gravity_torque(geom, q);
    let tau = rigid / RIGID_BODY_TO_NCM
        + Vector2::new(geom.b_h * q.omega_h, geom.b_k * q.omega_k);
    TorqueVector::from(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    /// Lagrangian `T - V` from link centre-of-mass kinematics, without any
    /// reference to the closed-form matrices above.
    fn lagrangian(geom: &LegGeometry, q: [f64; 2], qd: [f64; 2]) -> f64 {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let w1 = qd[0];
        let w12 = qd[0] + qd[1];
        // link 1 com velocity
        let v1 = [-geom.com1 * s1 * w1, geom.com1 * c1 * w1];
        // link 2 com velocity = knee velocity + rotation about knee
        let v2 = [
            -geom.l1 * s1 * w1 - geom.com2 * s12 * w12,
            geom.l1 * c1 * w1 + geom.com2 * c12 * w12,
        ];
        let kinetic = 0.5 * geom.m1 * (v1[0] * v1[0] + v1[1] * v1[1])
            + 0.5 * geom.i1 * w1 * w1
            + 0.5 * geom.m2 * (v2[0] * v2[0] + v2[1] * v2[1])
            + 0.5 * geom.i2 * w12 * w12;
        let z1 = geom.com1 * s1;
        let z2 = geom.l1 * s1 + geom.com2 * s12;
        let potential = geom.gravity * (geom.m1 * z1 + geom.m2 * z2);
        kinetic - potential
    }

    /// Euler-Lagrange torque by nested central differences:
    /// `d/dt dL/dqd - dL/dq` with `d/dt` expanded along `(qd, qdd)`.
    fn lagrangian_oracle(geom: &LegGeometry, q: &JointState, accel: [f64; 2]) -> [f64; 2] {
        let h = 1e-4;
        let qv = [q.theta_h, q.theta_k];
        let qdv = [q.omega_h, q.omega_k];
        let dl_dqd = |qq: [f64; 2], qqd: [f64; 2], i: usize| {
            let mut p = qqd;
            let mut m = qqd;
            p[i] += h;
            m[i] -= h;
            (lagrangian(geom, qq, p) - lagrangian(geom, qq, m)) / (2.0 * h)
        };
        let mut tau = [0.0; 2];
        for (i, t) in tau.iter_mut().enumerate() {
            // time derivative of dL/dqd_i along the motion
            let s = 1e-4;
            let fwd_q = [qv[0] + s * qdv[0], qv[1] + s * qdv[1]];
            let bwd_q = [qv[0] - s * qdv[0], qv[1] - s * qdv[1]];
            let fwd_qd = [qdv[0] + s * accel[0], qdv[1] + s * accel[1]];
            let bwd_qd = [qdv[0] - s * accel[0], qdv[1] - s * accel[1]];
            let ddt = (dl_dqd(fwd_q, fwd_qd, i) - dl_dqd(bwd_q, bwd_qd, i)) / (2.0 * s);
            let mut qp = qv;
            let mut qm = qv;
            qp[i] += h;
            qm[i] -= h;
            let dl_dq = (lagrangian(geom, qp, qdv) - lagrangian(geom, qm, qdv)) / (2.0 * h);
            *t = (ddt - dl_dq) / RIGID_BODY_TO_NCM;
        }
        tau[0] += geom.b_h * q.omega_h;
        tau[1] += geom.b_k * q.omega_k;
        tau
    }

    #[test]
    fn equilibrium_without_gravity_is_torque_free() {
        let g = LegGeometry::default().frictionless_zero_gravity();
        let tau = inverse_dynamics(&g, &JointState::default(), [0.0, 0.0]);
        assert_eq!(tau, TorqueVector::ZERO);
    }

    #[test]
    fn static_leg_needs_only_gravity() {
        let g = LegGeometry::default();
        let q = JointState::at_rest(-1.2, 0.8);
        let tau = inverse_dynamics(&g, &q, [0.0, 0.0]);
        let grav = gravity_torque(&g, &q) / RIGID_BODY_TO_NCM;
        assert_eq!(tau.hip, grav.x);
        assert_eq!(tau.knee, grav.y);
    }

    #[test]
    fn matches_lagrangian_oracle() {
        use rand::{Rng, SeedableRng};
        let g = LegGeometry::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let q = JointState::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
            let acc = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let tau = inverse_dynamics(&g, &q, acc);
            let oracle = lagrangian_oracle(&g, &q, acc);
            for (a, b) in tau.to_array().iter().zip(oracle) {
                let scale = a.abs().max(b.abs()).max(1.0);
                assert!((a - b).abs() / scale < 1e-3, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn velocity_product_terms_do_no_work_over_a_closed_loop() {
        let g = LegGeometry::default().frictionless_zero_gravity();
        // constant joint rates, knee sweeps a full revolution
        let (wh, wk) = (0.4, 1.0);
        let period = TAU / wk;
        let n = 20_000;
        let dt = period / n as f64;
        let power = |i: usize| {
            let t = i as f64 * dt;
            let q = JointState::new(0.3 + wh * t, wk * t, wh, wk);
            let tau = inverse_dynamics(&g, &q, [0.0, 0.0]);
            tau.hip * wh + tau.knee * wk
        };
        let mut work = 0.0;
        for i in 0..n {
            work += 0.5 * (power(i) + power(i + 1)) * dt;
        }
        assert!(work.abs() < 1e-3, "net work {work}");
    }
}
