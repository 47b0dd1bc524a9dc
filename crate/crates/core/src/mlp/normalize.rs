/// Per-channel affine map `y = scale * x + offset`.
///
/// Fitted so the observed range of each channel lands on `[-0.9, 0.9]`,
/// inside the open range of the saturating output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    scale: Vec<f64>,
    offset: Vec<f64>,
}

pub const NORMALIZED_MARGIN: f64 = 0.9;

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            scale: vec![1.0; dim],
            offset: vec![0.0; dim],
        }
    }

    /// `None` when any scale is zero or any constant is non-finite.
    pub fn from_parts(scale: Vec<f64>, offset: Vec<f64>) -> Option<Self> {
        if scale.len() != offset.len()
            || scale.iter().any(|s| !s.is_finite() || *s == 0.0)
            || offset.iter().any(|o| !o.is_finite())
        {
            return None;
        }
        Some(Self { scale, offset })
    }

    /// Fits min/max of every channel. A constant channel is centred with
    /// unit scale.
    pub fn fit<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for row in rows {
            for c in 0..dim {
                lo[c] = lo[c].min(row[c]);
                hi[c] = hi[c].max(row[c]);
            }
        }
        let mut scale = vec![1.0; dim];
        let mut offset = vec![0.0; dim];
        for c in 0..dim {
            if !lo[c].is_finite() || !hi[c].is_finite() {
                continue;
            }
            let span = hi[c] - lo[c];
            if span > 0.0 {
                scale[c] = 2.0 * NORMALIZED_MARGIN / span;
                offset[c] = -NORMALIZED_MARGIN - scale[c] * lo[c];
            } else {
                offset[c] = -lo[c];
            }
        }
        Self { scale, offset }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for c in 0..self.scale.len() {
            out[c] = self.scale[c] * x[c] + self.offset[c];
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.forward_into(x, &mut out);
        out
    }

    pub fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        for c in 0..self.scale.len() {
            out[c] = (y[c] - self.offset[c]) / self.scale[c];
        }
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.inverse_into(y, &mut out);
        out
    }
}
