use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::BlockSpec;

/// Block weights of the weighted ℓ1 objective and their per-band expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    block: Vec<f64>,
    band: Vec<f64>,
}

impl WeightVector {
    /// A single block covering all `n` bands with weight 1: plain ℓ1.
    pub fn uniform(n: usize) -> Self {
        Self {
            block: vec![1.0],
            band: vec![1.0; n],
        }
    }

    /// Arbitrary positive block weights, replicated over each block's bands.
    pub fn from_blocks(spec: &BlockSpec, block: Vec<f64>) -> Result<Self> {
        if block.len() != spec.num_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} blocks",
                block.len(),
                spec.num_blocks()
            )));
        }
        if let Some(i) = block.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight of block {i} must be positive and finite, got {}",
                block[i]
            )));
        }
        let band = spec
            .blocks()
            .iter()
            .zip(&block)
            .flat_map(|(b, &w)| std::iter::repeat_n(w, b.size))
            .collect();
        Ok(Self { block, band })
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn band(&self) -> &[f64] {
        &self.band
    }

    /// `Σ_i w_i |x_i|`.
    pub fn weighted_norm(&self, x: &[f64]) -> f64 {
        self.band.iter().zip(x).map(|(w, v)| w * v.abs()).sum()
    }
}

/// Block weights inversely proportional to the average block sparsity,
/// normalized to sum to one.
pub fn compute_weights(spec: &BlockSpec) -> Result<WeightVector> {
    let kbar = spec.mean_sparsities();
    if let Some(block) = kbar.iter().position(|&k| k <= 0.0) {
        return Err(Error::EmptyBlock { block });
    }
    let total: f64 = kbar.iter().map(|k| 1.0 / k).sum();
    let omega = kbar.iter().map(|k| (1.0 / k) / total).collect();
    WeightVector::from_blocks(spec, omega)
}
