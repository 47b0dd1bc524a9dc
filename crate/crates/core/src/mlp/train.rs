//! Mini-batch Adam on the normalised MSE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use super::metrics::{evaluate, EvalReport};
use super::network::{Gradients, Network, Scratch};
use super::normalize::Normalizer;
use super::MlpError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Stop as soon as the training MSE reaches this value.
    pub goal_mse: f64,
    pub max_epochs: usize,
    /// Epochs without a new best validation MSE before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            goal_mse: 1e-5,
            max_epochs: 2000,
            patience: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GoalReached,
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub first_validation_mse: f64,
    pub best_validation_mse: f64,
    pub stop_reason: StopReason,
    pub history: Vec<EpochStats>,
    /// Metrics of the returned (best-validation) weights.
    pub eval: EvalReport,
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Self {
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network, g: &Gradients, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        let lr = cfg.learning_rate;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let grads = g.weights[l].iter().chain(&g.biases[l]);
            let ms = self.m.weights[l].iter_mut().chain(self.m.biases[l].iter_mut());
            let vs = self.v.weights[l].iter_mut().chain(self.v.biases[l].iter_mut());
            for (((p, gi), m), v) in params.zip(grads).zip(ms).zip(vs) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gi;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gi * gi;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Trains `net` in place and leaves it holding the best-validation weights.
///
/// Normalisers are fitted on the training split first. When the dataset has
/// no validation rows the training MSE stands in for validation.
pub fn train(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, MlpError> {
    if !(cfg.goal_mse > 0.0) || cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(MlpError::InvalidSpec(
            "goal_mse > 0, batch_size >= 1 and max_epochs >= 1 are required".into(),
        ));
    }
    if data.input_dim() != net.spec().input_dim || data.output_dim() != net.spec().output_dim {
        return Err(MlpError::DimMismatch("dataset and network widths differ".into()));
    }
    let train_idx = data.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    let val_idx = data.indices(Split::Validation);

    let input_norm = Normalizer::fit(data.input_dim(), train_idx.iter().map(|&i| data.input(i)));
    let output_norm = Normalizer::fit(data.output_dim(), train_idx.iter().map(|&i| data.target(i)));
    net.set_normalizers(input_norm, output_norm)?;

    let (xs, ts) = normalized_rows(net, data);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net);
    let mut grad = Gradients::zeros_like(net);
    let mut scratch = Scratch::new(net);
    let od = data.output_dim();

    let mse_of = |net: &Network, idx: &[usize], s: &mut Scratch| -> f64 {
        let mut sq = 0.0;
        for &i in idx {
            let y = net.forward_scratch(&xs[i], s);
            sq += y.iter().zip(&ts[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        sq / (idx.len() * od) as f64
    };
    let val_or_train = if val_idx.is_empty() { &train_idx } else { &val_idx };

    let first_val = mse_of(net, val_or_train, &mut scratch);
    let mut best = (first_val, 0usize, net.layers.clone());
    let mut history = Vec::new();
    let mut order = train_idx.clone();
    let mut stop_reason = StopReason::MaxEpochs;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.clear();
            let w = 1.0 / (batch.len() * od) as f64;
            for &i in batch {
                net.backprop_sample(&xs[i], &ts[i], w, &mut scratch, &mut grad);
            }
            adam.step(net, &grad, cfg);
        }
        epochs_run = epoch;
        let train_mse = mse_of(net, &train_idx, &mut scratch);
        let val_mse = if val_idx.is_empty() {
            train_mse
        } else {
            mse_of(net, &val_idx, &mut scratch)
        };
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(MlpError::DivergedTraining { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_mse,
            validation_mse: val_mse,
        });
        if val_mse < best.0 {
            best = (val_mse, epoch, net.layers.clone());
        }
        if train_mse <= cfg.goal_mse {
            stop_reason = StopReason::GoalReached;
            break;
        }
        if epoch - best.1 >= cfg.patience {
            stop_reason = StopReason::Patience;
            break;
        }
    }

    net.layers = best.2;
    Ok(TrainReport {
        epochs_run,
        best_epoch: best.1,
        first_validation_mse: first_val,
        best_validation_mse: best.0,
        stop_reason,
        history,
        eval: evaluate(net, data),
    })
}

fn normalized_rows(net: &Network, data: &Dataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let xs = data.inputs().map(|x| net.input_norm.forward(x)).collect();
    let ts = data.targets().map(|t| net.output_norm.forward(t)).collect();
    (xs, ts)
}
