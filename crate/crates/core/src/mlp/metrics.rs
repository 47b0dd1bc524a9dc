use super::dataset::{Dataset, Split};
use super::network::{Network, Scratch};
use super::normalize::Normalizer;

/// Fit quality of a predictor on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// MSE in normalised target units; `None` for an empty split.
    pub train_mse: Option<f64>,
    pub validation_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub all_mse: f64,
    /// Pearson correlation between prediction and target, per output, over
    /// every sample.
    pub regression_r: Vec<f64>,
    /// Largest absolute error in physical units, per output.
    pub max_abs_error: Vec<f64>,
}

impl EvalReport {
    pub fn max_error(&self) -> f64 {
        self.max_abs_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_r(&self) -> f64 {
        self.regression_r.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn evaluate(net: &Network, data: &Dataset) -> EvalReport {
    let mut s = Scratch::new(net);
    let mut xn = vec![0.0; data.input_dim()];
    let mut preds = Vec::with_capacity(data.len() * data.output_dim());
    let mut y = vec![0.0; data.output_dim()];
    for x in data.inputs() {
        net.input_norm.forward_into(x, &mut xn);
        let yn = net.forward_scratch(&xn, &mut s);
        net.output_norm.inverse_into(yn, &mut y);
        preds.extend_from_slice(&y);
    }
    evaluate_predictions(data, &preds, &net.output_norm)
}

/// Metrics for row-major physical-unit predictions, one row per sample.
pub fn evaluate_predictions(data: &Dataset, preds: &[f64], norm: &Normalizer) -> EvalReport {
    let od = data.output_dim();
    assert_eq!(preds.len(), data.len() * od, "one prediction row per sample");
    let mut sums = [(0.0, 0usize); 3];
    let mut total = 0.0;
    let mut max_err = vec![0.0f64; od];
    let mut tn = vec![0.0; od];
    let mut pn = vec![0.0; od];
    for i in 0..data.len() {
        let t = data.target(i);
        let p = &preds[i * od..(i + 1) * od];
        norm.forward_into(t, &mut tn);
        norm.forward_into(p, &mut pn);
        let sq: f64 = tn.iter().zip(&pn).map(|(a, b)| (a - b) * (a - b)).sum();
        total += sq;
        let slot = match data.split(i) {
            Split::Train => 0,
            Split::Validation => 1,
            Split::Test => 2,
        };
        sums[slot].0 += sq;
        sums[slot].1 += 1;
        for j in 0..od {
            max_err[j] = max_err[j].max((p[j] - t[j]).abs());
        }
    }
    let mse = |(s, n): (f64, usize)| (n > 0).then(|| s / (n * od) as f64);
    EvalReport {
        train_mse: mse(sums[0]),
        validation_mse: mse(sums[1]),
        test_mse: mse(sums[2]),
        all_mse: total / (data.len() * od) as f64,
        regression_r: (0..od)
            .map(|j| {
                pearson(
                    (0..data.len()).map(|i| (preds[i * od + j], data.target(i)[j])),
                )
            })
            .collect(),
        max_abs_error: max_err,
    }
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let mut first: Option<(f64, f64)> = None;
    let (mut x_const, mut y_const) = (true, true);
    for (x, y) in pairs.clone() {
        n += 1.0;
        sx += x;
        sy += y;
        let (x0, y0) = *first.get_or_insert((x, y));
        x_const &= x == x0;
        y_const &= y == y0;
    }
    if n == 0.0 || x_const || y_const {
        return 0.0;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        cxy += (x - mx) * (y - my);
        cxx += (x - mx) * (x - mx);
        cyy += (y - my) * (y - my);
    }
    if cxx == 0.0 || cyy == 0.0 {
        0.0
    } else {
        cxy / (cxx * cyy).sqrt()
    }
}
