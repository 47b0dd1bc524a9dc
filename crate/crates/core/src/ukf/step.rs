//! Predict, measure and update.
//!
//! The transition moves every sigma point by the change in the network's
//! torque prediction, `g(chi) = chi + (T_p - T_f) + v_p`, where `T_f` is the
//! previous filtered torque and `T_p = ANN(p_r)` the new prediction. The
//! measurement map `h` is the same function applied to the original sigma
//! points with `v_m` in place of `v_p`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::sigma::{regularized_cholesky, sigma_points, weighted_cross, weighted_moments, SigmaSet};
use super::{TorquePredictor, UkfConfig, UkfError, UkfState};
use crate::types::JointState;

/// Sigma points pushed through a map, with their weighted moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub mean: DVector<f64>,
    /// Weighted covariance of the points plus the additive noise matrix.
    pub cov: DMatrix<f64>,
    pub points: DMatrix<f64>,
}

/// Per-step intermediates, for logging and plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub f_hat: DVector<f64>,
    pub c_p_pred: DMatrix<f64>,
    pub z_hat: DVector<f64>,
    pub c_z: DMatrix<f64>,
    pub c_v: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub innovation: DVector<f64>,
    /// `max |C_p - C_p^T|` of the updated covariance before symmetrisation.
    pub asymmetry: f64,
}

/// `g(chi) = chi + (t_p - t_f_prev) + noise`.
pub fn transition_g(
    chi: &DVector<f64>,
    t_f_prev: &DVector<f64>,
    t_p: &DVector<f64>,
    noise: &DVector<f64>,
) -> DVector<f64> {
    chi + (t_p - t_f_prev) + noise
}

/// Pushes every sigma point through `map` (called with the column index and
/// the point) and forms the weighted mean and `cov + additive`.
pub fn unscented_transform(
    sigma: &SigmaSet,
    mut map: impl FnMut(usize, &DVector<f64>) -> DVector<f64>,
    additive: &DMatrix<f64>,
) -> Propagated {
    let d_out = {
        let first = map(0, &sigma.column(0));
        let mut pts = DMatrix::zeros(first.len(), sigma.len());
        pts.set_column(0, &first);
        for col in 1..sigma.len() {
            pts.set_column(col, &map(col, &sigma.column(col)));
        }
        pts
    };
    let (mean, cov) = weighted_moments(&d_out, &sigma.weights);
    Propagated {
        mean,
        cov: cov + additive,
        points: d_out,
    }
}

/// Step 2: `f_col = g(chi_col)`, `f' = sum w f`, `C'_p = sum w (f - f')(f - f')^T + N_p`.
pub fn predict(
    sigma: &SigmaSet,
    transition: impl FnMut(usize, &DVector<f64>) -> DVector<f64>,
    process_noise: &DMatrix<f64>,
) -> Propagated {
    unscented_transform(sigma, transition, process_noise)
}

/// Step 3: `z_col = h(chi_col)`, `z = sum w z`, `C_z = sum w (z - z)(z - z)^T + N_m`.
pub fn measure(
    sigma: &SigmaSet,
    measurement: impl FnMut(usize, &DVector<f64>) -> DVector<f64>,
    measurement_noise: &DMatrix<f64>,
) -> Propagated {
    unscented_transform(sigma, measurement, measurement_noise)
}

/// Step 4: cross-covariance, gain from `K C_z = C_v`, and the state update
/// `T_f = f' + K (T_m - z)`, `C_p = C'_p - K C_z K^T` (then symmetrised).
pub fn update(
    pred: &Propagated,
    meas: &Propagated,
    weights: &DVector<f64>,
    t_m: &DVector<f64>,
) -> Result<(UkfState, StepTrace), UkfError> {
    if t_m.len() != meas.mean.len() {
        return Err(UkfError::DimMismatch(format!(
            "measurement has {} entries, filter expects {}",
            t_m.len(),
            meas.mean.len()
        )));
    }
    let c_v = weighted_cross(&pred.points, &pred.mean, &meas.points, &meas.mean, weights);
    let gain = solve_gain(&c_v, &meas.cov)?;
    let innovation = t_m - &meas.mean;
    let t_f = &pred.mean + &gain * &innovation;
    let raw = &pred.cov - &gain * &meas.cov * gain.transpose();
    let asymmetry = (&raw - raw.transpose()).abs().max();
    let c_p = (&raw + raw.transpose()) * 0.5;
    if !t_f.iter().chain(c_p.iter()).all(|v| v.is_finite()) {
        return Err(UkfError::NonFinite);
    }
    Ok((
        UkfState::new(t_f, c_p),
        StepTrace {
            f_hat: pred.mean.clone(),
            c_p_pred: pred.cov.clone(),
            z_hat: meas.mean.clone(),
            c_z: meas.cov.clone(),
            c_v,
            gain,
            innovation,
            asymmetry,
        },
    ))
}

/// `K = C_v C_z^-1`, computed as the solution of `C_z K^T = C_v^T`.
fn solve_gain(c_v: &DMatrix<f64>, c_z: &DMatrix<f64>) -> Result<DMatrix<f64>, UkfError> {
    let sym = (c_z + c_z.transpose()) * 0.5;
    let l = regularized_cholesky(&sym).ok_or(UkfError::SingularInnovationCovariance)?;
    let diag_min = l.diagonal().iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    if diag_min == 0.0 {
        return Err(UkfError::SingularInnovationCovariance);
    }
    // forward then backward substitution with the triangular factor
    let y = l
        .solve_lower_triangular(&c_v.transpose())
        .ok_or(UkfError::SingularInnovationCovariance)?;
    let kt = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(UkfError::SingularInnovationCovariance)?;
    Ok(kt.transpose())
}

/// Source of the additive `v_p`, `v_m` terms.
pub enum AdditiveNoise<'a, R: Rng> {
    /// Both terms are zero.
    Off,
    /// Uniform draws from the configured ranges, one vector per sigma point.
    Uniform(&'a mut R),
}

fn draw(range: [f64; 2], dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    if range[0] == range[1] {
        return DVector::from_element(dim, range[0]);
    }
    DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(range[0]..=range[1])))
}

/// One full filter step given the new prediction `t_p` and measurement `t_m`.
pub fn filter_step_with_prediction<R: Rng>(
    prev: &UkfState,
    t_p: &DVector<f64>,
    t_m: &DVector<f64>,
    cfg: &UkfConfig,
    mut noise: AdditiveNoise<'_, R>,
) -> Result<(UkfState, StepTrace), UkfError> {
    let d = cfg.dim;
    if t_p.len() != d {
        return Err(UkfError::DimMismatch(format!(
            "prediction has {} entries, filter dim is {d}",
            t_p.len()
        )));
    }
    let sigma = sigma_points(prev, cfg)?;
    let m = sigma.len();
    let (vp, vm): (Vec<DVector<f64>>, Vec<DVector<f64>>) = match &mut noise {
        AdditiveNoise::Off => (vec![DVector::zeros(d); m], vec![DVector::zeros(d); m]),
        AdditiveNoise::Uniform(rng) => (
            (0..m).map(|_| draw(cfg.vp_range, d, *rng)).collect(),
            (0..m).map(|_| draw(cfg.vm_range, d, *rng)).collect(),
        ),
    };
    let pred = predict(
        &sigma,
        |col, chi| transition_g(chi, &prev.t_f, t_p, &vp[col]),
        &cfg.process_noise(),
    );
    let meas = measure(
        &sigma,
        |col, chi| transition_g(chi, &prev.t_f, t_p, &vm[col]),
        &cfg.measurement_noise(),
    );
    update(&pred, &meas, &sigma.weights, t_m)
}

/// One full filter step at joint state `p_r`, asking `predictor` for `T_p`.
pub fn filter_step<R: Rng>(
    prev: &UkfState,
    p_r: &JointState,
    t_m: &DVector<f64>,
    cfg: &UkfConfig,
    predictor: &dyn TorquePredictor,
    noise: AdditiveNoise<'_, R>,
) -> Result<(UkfState, StepTrace), UkfError> {
    let t_p = predictor.predict_torque(p_r).to_dvector();
    filter_step_with_prediction(prev, &t_p, t_m, cfg, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn v(a: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(a)
    }

    #[test]
    fn transition_at_mean_returns_prediction() {
        let t_f = v(&[10.0, -4.0]);
        let t_p = v(&[12.5, -3.0]);
        assert_eq!(transition_g(&t_f, &t_f, &t_p, &DVector::zeros(2)), t_p);
        // unchanged prediction: identity on any point
        let chi = v(&[1.0, 2.0]);
        assert_eq!(transition_g(&chi, &t_f, &t_f, &DVector::zeros(2)), chi);
    }

    #[test]
    fn literal_noise_stays_in_range() {
        let cfg = UkfConfig::default();
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let t_f = v(&[10.0, -4.0]);
        let t_p = v(&[12.5, -3.0]);
        let chi = v(&[11.0, -1.0]);
        for _ in 0..1000 {
            let n = draw(cfg.vp_range, 2, &mut rng);
            let out = transition_g(&chi, &t_f, &t_p, &n);
            let resid = out - (&chi + &t_p - &t_f);
            assert!(resid.iter().all(|r| (-3.4..=3.4).contains(r)));
        }
    }

    #[test]
    fn identity_transition_adds_process_noise() {
        let cfg = UkfConfig::default();
        let state = UkfState::new(v(&[5.0, 1.0]), DMatrix::from_row_slice(2, 2, &[30.0, 4.0, 4.0, 9.0]));
        let sigma = sigma_points(&state, &cfg).unwrap();
        let zero = DVector::zeros(2);
        let pred = predict(&sigma, |_, chi| transition_g(chi, &state.t_f, &state.t_f, &zero), &cfg.process_noise());
        assert!((&pred.mean - &state.t_f).abs().max() < 1e-12);
        assert!((&pred.cov - (&state.c_p + cfg.process_noise())).abs().max() < 1e-9);
    }

    #[test]
    fn deterministic_measurement_equals_prediction() {
        let cfg = UkfConfig::default();
        let state = UkfState::new(v(&[5.0, 1.0]), DMatrix::from_row_slice(2, 2, &[30.0, 4.0, 4.0, 9.0]));
        let t_p = v(&[7.0, 0.0]);
        let sigma = sigma_points(&state, &cfg).unwrap();
        let zero = DVector::zeros(2);
        let pred = predict(&sigma, |_, c| transition_g(c, &state.t_f, &t_p, &zero), &cfg.process_noise());
        let meas = measure(&sigma, |_, c| transition_g(c, &state.t_f, &t_p, &zero), &cfg.measurement_noise());
        assert_eq!(pred.points, meas.points);
        assert_eq!(pred.mean, meas.mean);
        assert!((&meas.cov - &pred.cov - (cfg.measurement_noise() - cfg.process_noise())).abs().max() < 1e-9);
    }

    #[test]
    fn scalar_gain_arithmetic() {
        // C_v = 2, C_z = 4 -> K = 0.5; innovation 1 -> T_f = f' + 0.5
        let gain = solve_gain(&DMatrix::from_element(1, 1, 2.0), &DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(gain[(0, 0)], 0.5);
        // construct propagated sets realising C_v = 2, C_z = 4 with one side point pair
        let w = v(&[0.0, 0.5, 0.5]);
        let pred = Propagated {
            mean: v(&[10.0]),
            cov: DMatrix::from_element(1, 1, 3.0),
            points: DMatrix::from_row_slice(1, 3, &[10.0, 11.0, 9.0]),
        };
        let meas = Propagated {
            mean: v(&[20.0]),
            cov: DMatrix::from_element(1, 1, 4.0),
            points: DMatrix::from_row_slice(1, 3, &[20.0, 22.0, 18.0]),
        };
        let (state, trace) = update(&pred, &meas, &w, &v(&[21.0])).unwrap();
        assert_eq!(trace.c_v[(0, 0)], 2.0);
        assert_eq!(trace.gain[(0, 0)], 0.5);
        assert_eq!(state.t_f[0], 10.5);
        assert_eq!(state.c_p[(0, 0)], 3.0 - 0.5 * 4.0 * 0.5);
    }

    #[test]
    fn zero_innovation_keeps_predicted_mean() {
        let cfg = UkfConfig::default();
        let state = UkfState::new(v(&[5.0, 1.0]), cfg.process_noise());
        let t_p = v(&[6.0, 2.0]);
        let (next, trace) =
            filter_step_with_prediction::<ChaCha8Rng>(&state, &t_p, &t_p, &cfg, AdditiveNoise::Off).unwrap();
        assert!(trace.innovation.abs().max() < 1e-12);
        assert!((next.t_f - t_p).abs().max() < 1e-9);
    }

    #[test]
    fn singular_innovation_covariance_reported() {
        let err = solve_gain(&DMatrix::from_element(1, 1, 1.0), &DMatrix::zeros(1, 1)).unwrap_err();
        assert!(matches!(err, UkfError::SingularInnovationCovariance));
    }
}
