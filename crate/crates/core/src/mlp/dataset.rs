//! Regression datasets and their CSV form.
//!
//! CSV layout: header `theta_h,theta_k,omega_h,omega_k,tau_h,tau_k`, one
//! sample per LF-terminated row, floats written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MlpError;
use crate::types::{JointState, TorqueVector};

pub const DATASET_HEADER: &str = "theta_h,theta_k,omega_h,omega_k,tau_h,tau_k";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Train / validation / test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
        }
    }
}

/// Row-major samples with a split tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    splits: Vec<Split>,
}

impl Dataset {
    /// All rows start in the training split.
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
    ) -> Result<Self, MlpError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(MlpError::InvalidDataset("zero-width inputs or targets".into()));
        }
        if inputs.len() % input_dim != 0 || targets.len() % output_dim != 0 {
            return Err(MlpError::InvalidDataset("ragged sample arrays".into()));
        }
        let n = inputs.len() / input_dim;
        if targets.len() / output_dim != n {
            return Err(MlpError::InvalidDataset(format!(
                "{n} inputs but {} targets",
                targets.len() / output_dim
            )));
        }
        if n == 0 {
            return Err(MlpError::EmptyDataset);
        }
        if !inputs.iter().chain(&targets).all(|v| v.is_finite()) {
            return Err(MlpError::InvalidDataset("non-finite value".into()));
        }
        Ok(Self {
            input_dim,
            output_dim,
            inputs,
            targets,
            splits: vec![Split::Train; n],
        })
    }

    pub fn from_torque_samples(samples: &[(JointState, TorqueVector)]) -> Result<Self, MlpError> {
        let inputs = samples.iter().flat_map(|(q, _)| q.to_array()).collect();
        let targets = samples.iter().flat_map(|(_, t)| t.to_array()).collect();
        Self::new(4, 2, inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.input_dim)
    }

    pub fn targets(&self) -> impl Iterator<Item = &[f64]> {
        self.targets.chunks_exact(self.output_dim)
    }

    /// Seeded shuffle into train/validation/test. Validation and test get
    /// `round(n * fraction)` rows each; the remainder trains.
    pub fn assign_splits(&mut self, seed: u64, fractions: SplitFractions) -> Result<(), MlpError> {
        let SplitFractions { train, validation, test } = fractions;
        if [train, validation, test].iter().any(|f| !(0.0..=1.0).contains(f))
            || ((train + validation + test) - 1.0).abs() > 1e-9
        {
            return Err(MlpError::InvalidDataset("split fractions must sum to 1".into()));
        }
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_val = (n as f64 * validation).round() as usize;
        let n_test = ((n as f64 * test).round() as usize).min(n - n_val);
        for (rank, &i) in order.iter().enumerate() {
            self.splits[i] = if rank < n_val {
                Split::Validation
            } else if rank < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, MlpError> {
        self.require_torque_layout()?;
        let mut out = String::with_capacity(self.len() * 120);
        out.push_str(DATASET_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let x = self.input(i);
            let y = self.target(i);
            let _ = writeln!(out, "{:?},{:?},{:?},{:?},{:?},{:?}", x[0], x[1], x[2], x[3], y[0], y[1]);
        }
        Ok(out)
    }

    /// Parses the CSV form. Every row lands in the training split.
    pub fn from_csv_str(text: &str) -> Result<Self, MlpError> {
        let mut lines = text.split('\n').enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == DATASET_HEADER => {}
            _ => {
                return Err(MlpError::Parse {
                    line: 1,
                    msg: format!("expected header `{DATASET_HEADER}`"),
                })
            }
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (idx, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut fields = [0.0f64; 6];
            let mut count = 0;
            for field in line.split(',') {
                if count == 6 {
                    count += 1;
                    break;
                }
                fields[count] = field.trim().parse::<f64>().map_err(|e| MlpError::Parse {
                    line: idx + 1,
                    msg: format!("`{field}`: {e}"),
                })?;
                count += 1;
            }
            if count != 6 {
                return Err(MlpError::Parse {
                    line: idx + 1,
                    msg: "expected 6 columns".into(),
                });
            }
            inputs.extend_from_slice(&fields[..4]);
            targets.extend_from_slice(&fields[4..]);
        }
        Self::new(4, 2, inputs, targets)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), MlpError> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| MlpError::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self, MlpError> {
        let text = std::fs::read_to_string(path).map_err(|e| MlpError::io(path, e))?;
        Self::from_csv_str(&text)
    }

    fn require_torque_layout(&self) -> Result<(), MlpError> {
        if self.input_dim != 4 || self.output_dim != 2 {
            return Err(MlpError::DimMismatch(format!(
                "CSV datasets are 4 -> 2, this one is {} -> {}",
                self.input_dim, self.output_dim
            )));
        }
        Ok(())
    }
}
