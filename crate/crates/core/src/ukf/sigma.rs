//! Sigma points and weights.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{UkfConfig, UkfError, UkfState};

/// Columns of `points` are the `2d + 1` sigma points; column 0 is the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSet {
    pub points: DMatrix<f64>,
    pub weights: DVector<f64>,
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn column(&self, col: usize) -> DVector<f64> {
        self.points.column(col).into_owned()
    }

    /// Weighted mean and covariance of the points themselves.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        weighted_moments(&self.points, &self.weights)
    }
}

/// `w_0 = lambda / (lambda + d)`, `w_i = 1 / (2 (d + lambda))`.
///
/// The same vector weights both the mean and the covariance sums.
pub fn ut_weights(cfg: &UkfConfig) -> DVector<f64> {
    let d = cfg.dim as f64;
    let lambda = cfg.lambda();
    let mut w = DVector::from_element(cfg.sigma_count(), 1.0 / (2.0 * (d + lambda)));
    w[0] = lambda / (lambda + d);
    w
}

pub(crate) fn weighted_moments(
    points: &DMatrix<f64>,
    weights: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mean = points * weights;
    let cov = weighted_cross(points, &mean, points, &mean, weights);
    (mean, cov)
}

/// `sum_i w_i (a_i - a_mean)(b_i - b_mean)^T`.
pub(crate) fn weighted_cross(
    a: &DMatrix<f64>,
    a_mean: &DVector<f64>,
    b: &DMatrix<f64>,
    b_mean: &DVector<f64>,
    weights: &DVector<f64>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), b.nrows());
    for (col, w) in weights.iter().enumerate() {
        let da = a.column(col) - a_mean;
        let db = b.column(col) - b_mean;
        out += (da * db.transpose()) * *w;
    }
    out
}

/// Lower Cholesky factor of a symmetric PSD matrix.
///
/// An all-zero matrix has the zero factor. Otherwise, if the plain
/// factorisation fails, `j * trace * I` is added with `j` stepping from 1e-9
/// to 1e-3 by factors of ten; `None` if nothing succeeds.
pub fn regularized_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    if m.iter().all(|v| *v == 0.0) {
        return Some(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c.l());
    }
    let trace = m.trace();
    if !(trace > 0.0) {
        return None;
    }
    let mut jitter = 1e-9;
    while jitter <= 1e-3 * (1.0 + 1e-12) {
        let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * (jitter * trace);
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c.l());
        }
        jitter *= 10.0;
    }
    None
}

/// `chi_0 = T_f`, `chi_i = T_f +- [sqrt((d + lambda) C_p)]_i`.
pub fn sigma_points(state: &UkfState, cfg: &UkfConfig) -> Result<SigmaSet, UkfError> {
    let d = cfg.dim;
    if state.t_f.len() != d || state.c_p.shape() != (d, d) {
        return Err(UkfError::DimMismatch(format!(
            "state is {} with {:?} covariance, filter dim is {d}",
            state.t_f.len(),
            state.c_p.shape()
        )));
    }
    let scaled = &state.c_p * (d as f64 + cfg.lambda());
    let root = regularized_cholesky(&scaled).ok_or(UkfError::CovarianceNotPsd)?;
    let mut points = DMatrix::zeros(d, 2 * d + 1);
    points.set_column(0, &state.t_f);
    for col in 0..d {
        let offset = root.column(col);
        points.set_column(1 + col, &(&state.t_f + offset));
        points.set_column(1 + d + col, &(&state.t_f - offset));
    }
    Ok(SigmaSet {
        points,
        weights: ut_weights(cfg),
    })
}
