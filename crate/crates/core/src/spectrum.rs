//! Heterogeneous block occupancy: layout, realizations, and the occupancy
//! distribution with its Chernoff lower bound.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One contiguous group of bands sharing an occupancy probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub size: usize,
    pub p: f64,
}

impl Block {
    pub fn new(size: usize, p: f64) -> Self {
        Self { size, p }
    }

    /// Average number of occupied bands, `size * p`.
    pub fn mean_sparsity(&self) -> f64 {
        self.size as f64 * self.p
    }
}

/// Wideband layout: ordered disjoint contiguous blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockSpec", into = "RawBlockSpec")]
pub struct BlockSpec {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlockSpec {
    blocks: Vec<Block>,
}

impl TryFrom<RawBlockSpec> for BlockSpec {
    type Error = Error;

    fn try_from(raw: RawBlockSpec) -> Result<Self> {
        BlockSpec::new(raw.blocks)
    }
}

impl From<BlockSpec> for RawBlockSpec {
    fn from(spec: BlockSpec) -> Self {
        RawBlockSpec {
            blocks: spec.blocks,
        }
    }
}

impl BlockSpec {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for (i, b) in blocks.iter().enumerate() {
            if b.size == 0 {
                return Err(Error::InvalidSpec(format!("block {i} has size 0")));
            }
            if !(0.0..=1.0).contains(&b.p) {
                return Err(Error::InvalidSpec(format!(
                    "block {i} occupancy probability {} is outside [0, 1]",
                    b.p
                )));
            }
            acc += b.size;
            offsets.push(acc);
        }
        Ok(Self { blocks, offsets })
    }

    /// Builds a spec from `(size, p)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(s, p)| Block::new(s, p)).collect())
    }

    /// Four 64-band blocks alternating between 10% and 1% occupancy.
    pub fn reference() -> Self {
        Self::from_pairs(&[(64, 0.1), (64, 0.01), (64, 0.1), (64, 0.01)])
            .expect("static layout is valid")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of bands.
    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Index of the block containing `band`.
    pub fn block_of(&self, band: usize) -> usize {
        assert!(band < self.n(), "band {band} out of range");
        self.offsets.partition_point(|&o| o <= band) - 1
    }

    /// Per-band occupancy probabilities, length `n`.
    pub fn band_probabilities(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.p, b.size))
            .collect()
    }

    pub fn mean_sparsities(&self) -> Vec<f64> {
        self.blocks.iter().map(Block::mean_sparsity).collect()
    }

    /// Expected number of occupied bands, `Σ p_i` over all bands.
    pub fn expected_occupancy(&self) -> f64 {
        self.mean_sparsities().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKind {
    /// Real amplitudes `±magnitude`, sign uniform.
    #[default]
    SignedMagnitude,
    /// Complex amplitudes with uniform phase; the recovery target is the modulus.
    ComplexModulus,
}

/// Law for the amplitudes of occupied bands: magnitude uniform on
/// `[low, high]` times `scale`, phase uniform on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeLaw {
    pub low: f64,
    pub high: f64,
    pub scale: f64,
    pub kind: AmplitudeKind,
}

impl Default for AmplitudeLaw {
    fn default() -> Self {
        Self {
            low: 0.5,
            high: 1.5,
            scale: 1.0,
            kind: AmplitudeKind::SignedMagnitude,
        }
    }
}

impl AmplitudeLaw {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.high >= self.low && self.scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "amplitude law needs 0 < low <= high and scale > 0 (got low={}, high={}, scale={})",
                self.low, self.high, self.scale
            )));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Complex64, f64) {
        let u: f64 = rng.random();
        let magnitude = self.scale * (self.low + (self.high - self.low) * u);
        match self.kind {
            AmplitudeKind::SignedMagnitude => {
                let value = if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                };
                (Complex64::new(value, 0.0), value)
            }
            AmplitudeKind::ComplexModulus => {
                let phase = 2.0 * PI * rng.random::<f64>();
                (Complex64::from_polar(magnitude, phase), magnitude)
            }
        }
    }
}

/// One sensing-window realization of the wideband.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumInstance {
    pub spec: BlockSpec,
    pub states: Vec<bool>,
    pub amplitudes: Vec<Complex64>,
    /// Real-valued recovery target.
    pub x: Vec<f64>,
    pub support: Vec<usize>,
}

impl SpectrumInstance {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Occupied-band count per block.
    pub fn block_counts(&self) -> Vec<usize> {
        (0..self.spec.num_blocks())
            .map(|b| self.spec.block_range(b).filter(|&i| self.states[i]).count())
            .collect()
    }
}

/// Draws independent Bernoulli(p_i) band states and amplitudes for the
/// occupied bands.
pub fn sample_occupancy<R: Rng + ?Sized>(
    spec: &BlockSpec,
    law: &AmplitudeLaw,
    rng: &mut R,
) -> SpectrumInstance {
    let n = spec.n();
    let mut states = vec![false; n];
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![0.0; n];
    let mut support = Vec::new();
    for (i, p) in spec.band_probabilities().into_iter().enumerate() {
        // u ∈ [0, 1): p = 0 never fires, p = 1 always does.
        let occupied = rng.random::<f64>() < p;
        if occupied {
            let (a, target) = law.draw(rng);
            states[i] = true;
            amplitudes[i] = a;
            x[i] = target;
            support.push(i);
        }
    }
    SpectrumInstance {
        spec: spec.clone(),
        states,
        amplitudes,
        x,
        support,
    }
}

/// Distribution of the number of occupied bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyPmf {
    pub probabilities: Vec<f64>,
}

impl OccupancyPmf {
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// `Pr(X <= k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        let end = (k + 1).min(self.probabilities.len());
        self.probabilities[..end].iter().sum::<f64>().min(1.0)
    }

    /// `Pr(X > k)`, summed from the upper tail to avoid cancellation.
    pub fn exceedance(&self, k: usize) -> f64 {
        if k + 1 >= self.probabilities.len() {
            return 0.0;
        }
        self.probabilities[k + 1..].iter().sum()
    }
}

/// Exact Poisson-binomial PMF of the occupied-band count by iterated
/// convolution with each band's Bernoulli law.
pub fn occupancy_pmf(spec: &BlockSpec) -> OccupancyPmf {
    poisson_binomial(&spec.band_probabilities())
}

pub fn poisson_binomial(ps: &[f64]) -> OccupancyPmf {
    let mut pmf = vec![0.0; ps.len() + 1];
    pmf[0] = 1.0;
    for (seen, &p) in ps.iter().enumerate() {
        for k in (1..=seen + 1).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    OccupancyPmf { probabilities: pmf }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffBound {
    /// Lower bound on `Pr(X <= k0)`, clamped to `[0, 1]`.
    pub value: f64,
    /// False when `k0 <= Σp`, where the bound carries no information.
    pub informative: bool,
}

/// `1 - e^{k0 - μ} / (k0/μ)^{k0}` with `μ = Σ p_i`.
pub fn chernoff_tail_bound(k0: f64, spec: &BlockSpec) -> ChernoffBound {
    chernoff_bound_for_mean(k0, spec.expected_occupancy())
}

pub fn chernoff_bound_for_mean(k0: f64, mean: f64) -> ChernoffBound {
    if mean <= 0.0 {
        return ChernoffBound {
            value: if k0 > 0.0 { 1.0 } else { 0.0 },
            informative: k0 > 0.0,
        };
    }
    if k0 <= mean {
        return ChernoffBound {
            value: 0.0,
            informative: false,
        };
    }
    let log_exceed = k0 - mean - k0 * (k0 / mean).ln();
    ChernoffBound {
        value: (1.0 - log_exceed.exp()).clamp(0.0, 1.0),
        informative: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SparsityLevel {
    pub k0: usize,
    /// Set when no `k0 <= n` reaches the requested confidence; `k0` is then `n`.
    pub saturated: bool,
}

/// Smallest integer `k0` whose Chernoff bound reaches `1 - alpha`.
pub fn select_sparsity_level(spec: &BlockSpec, alpha: f64) -> Result<SparsityLevel> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exceedance probability must lie in (0, 1), got {alpha}"
        )));
    }
    let n = spec.n();
    let target = 1.0 - alpha;
    for k0 in 0..=n {
        if chernoff_tail_bound(k0 as f64, spec).value >= target {
            return Ok(SparsityLevel {
                k0,
                saturated: false,
            });
        }
    }
    Ok(SparsityLevel {
        k0: n,
        saturated: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::from_seed;

    #[test]
    fn layout_indexing() {
        let spec = BlockSpec::from_pairs(&[(3, 0.5), (2, 0.1), (4, 0.0)]).unwrap();
        assert_eq!(spec.n(), 9);
        assert_eq!(spec.block_range(1), 3..5);
        let owners: Vec<usize> = (0..9).map(|i| spec.block_of(i)).collect();
        assert_eq!(owners, vec![0, 0, 0, 1, 1, 2, 2, 2, 2]);
        assert!((spec.expected_occupancy() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(BlockSpec::from_pairs(&[]).is_err());
        assert!(BlockSpec::from_pairs(&[(0, 0.1)]).is_err());
        assert!(BlockSpec::from_pairs(&[(4, 1.2)]).is_err());
        assert!(BlockSpec::from_pairs(&[(4, -0.1)]).is_err());
    }

    #[test]
    fn degenerate_probabilities() {
        let mut rng = from_seed(3);
        let empty = BlockSpec::from_pairs(&[(10, 0.0), (6, 0.0)]).unwrap();
        let inst = sample_occupancy(&empty, &AmplitudeLaw::default(), &mut rng);
        assert!(inst.support.is_empty());
        assert!(inst.x.iter().all(|&v| v == 0.0));

        let full = BlockSpec::from_pairs(&[(10, 1.0), (6, 1.0)]).unwrap();
        let inst = sample_occupancy(&full, &AmplitudeLaw::default(), &mut rng);
        assert_eq!(inst.support, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn sampled_amplitudes_follow_law() {
        let spec = BlockSpec::from_pairs(&[(50, 1.0)]).unwrap();
        for kind in [
            AmplitudeKind::SignedMagnitude,
            AmplitudeKind::ComplexModulus,
        ] {
            let law = AmplitudeLaw {
                scale: 2.0,
                kind,
                ..Default::default()
            };
            let inst = sample_occupancy(&spec, &law, &mut from_seed(11));
            for (a, &x) in inst.amplitudes.iter().zip(&inst.x) {
                assert!((1.0..=3.0).contains(&a.norm()));
                assert!((a.norm() - x.abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pmf_small_cases() {
        let pmf = poisson_binomial(&[0.5, 0.5]);
        assert_eq!(pmf.probabilities, vec![0.25, 0.5, 0.25]);
        let pmf = poisson_binomial(&[1.0, 0.0]);
        assert_eq!(pmf.probabilities, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn chernoff_degenerate_at_mean() {
        let b = chernoff_bound_for_mean(14.08, 14.08);
        assert_eq!(b.value, 0.0);
        assert!(!b.informative);
        assert!(!chernoff_bound_for_mean(3.0, 14.08).informative);
    }

    #[test]
    fn sparsity_level_rejects_bad_alpha() {
        let spec = BlockSpec::reference();
        assert!(select_sparsity_level(&spec, 0.0).is_err());
        assert!(select_sparsity_level(&spec, 1.0).is_err());
    }

    #[test]
    fn sparsity_level_saturates() {
        // Dense tiny layout: the bound cannot reach 1 - 1e-9 within n bands.
        let spec = BlockSpec::from_pairs(&[(4, 0.9)]).unwrap();
        let lvl = select_sparsity_level(&spec, 1e-9).unwrap();
        assert!(lvl.saturated);
        assert_eq!(lvl.k0, 4);
    }
}
