//! Closed-form calculators: the measurement-count lower bound, the
//! probability that block weighting ranks blocks correctly, the block swap
//! probability, and the stable-recovery constants.
//!
//! RIP constants are always inputs here. They are hypotheses, never estimated
//! from sampled matrices.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::spectrum::BlockSpec;

/// Per-block average sparsities with their hypothesized RIP constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipProfile {
    sparsities: Vec<f64>,
    deltas: Vec<f64>,
}

impl RipProfile {
    /// Requires `k̄_i > 0` and `δ_i ∈ (0, 1/2]`.
    pub fn new(sparsities: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        if sparsities.is_empty() || sparsities.len() != deltas.len() {
            return Err(Error::InvalidArgument(format!(
                "need one RIP constant per block ({} sparsities, {} constants)",
                sparsities.len(),
                deltas.len()
            )));
        }
        if let Some(k) = sparsities.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "block sparsity must be positive, got {k}"
            )));
        }
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d <= 0.5)) {
            return Err(Error::InvalidArgument(format!(
                "RIP constant must lie in (0, 1/2], got {d}"
            )));
        }
        Ok(Self { sparsities, deltas })
    }

    /// Same constant `delta` for every block.
    pub fn uniform(sparsities: Vec<f64>, delta: f64) -> Result<Self> {
        let deltas = vec![delta; sparsities.len()];
        Self::new(sparsities, deltas)
    }

    pub fn from_spec(spec: &BlockSpec, delta: f64) -> Result<Self> {
        Self::uniform(spec.mean_sparsities(), delta)
    }

    pub fn sparsities(&self) -> &[f64] {
        &self.sparsities
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn total_sparsity(&self) -> f64 {
        self.sparsities.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementBound {
    pub constant: f64,
    pub total_sparsity: f64,
    pub bound: f64,
    pub ceiling: usize,
}

/// Lower bound `m ≥ C·k̄·log(n/k̄)` with
/// `C = 1 / (2·log[(Σ√(2k̄_i(1+δ_i)) + max τ_i) / min τ_i])`, `τ_i = √(k̄_i(1−δ_i)/8)`.
pub fn min_measurements(profile: &RipProfile, n: usize) -> Result<MeasurementBound> {
    min_measurements_in_base(profile, n, std::f64::consts::E)
}

/// Same bound with both logarithms taken in `base`; the ratio cancels the base.
pub fn min_measurements_in_base(
    profile: &RipProfile,
    n: usize,
    base: f64,
) -> Result<MeasurementBound> {
    if !(base > 0.0 && base != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid logarithm base {base}"
        )));
    }
    let kbar = profile.total_sparsity();
    if kbar >= n as f64 {
        return Err(Error::Precondition(format!(
            "total sparsity {kbar} must be below the band count {n}"
        )));
    }
    let log = |v: f64| v.ln() / base.ln();
    let taus: Vec<f64> = profile
        .sparsities
        .iter()
        .zip(&profile.deltas)
        .map(|(k, d)| (k * (1.0 - d) / 8.0).sqrt())
        .collect();
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_max = taus.iter().copied().fold(0.0, f64::max);
    if tau_min <= 0.0 {
        return Err(Error::Precondition(
            "degenerate packing radius: some k̄_i(1 − δ_i) is zero".into(),
        ));
    }
    let spread: f64 = profile
        .sparsities
        .iter()
        .zip(&profile.deltas)
        .map(|(k, d)| (2.0 * k * (1.0 + d)).sqrt())
        .sum();
    let constant = 1.0 / (2.0 * log((spread + tau_max) / tau_min));
    let bound = constant * kbar * log(n as f64 / kbar);
    Ok(MeasurementBound {
        constant,
        total_sparsity: kbar,
        bound,
        ceiling: bound.ceil() as usize,
    })
}

/// One way of reading the measurement bound's inputs for a given layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInterpretation {
    pub name: &'static str,
    pub description: &'static str,
    pub sparsities: Vec<f64>,
    pub delta: f64,
    pub bound: f64,
    pub ceiling: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    pub claimed: f64,
    pub reproduced: bool,
    pub interpretations: Vec<BoundInterpretation>,
}

/// Evaluates the measurement bound under every input reading we consider
/// plausible for `spec` at sparsity level `k0`, and checks whether any of
/// them reproduces `claimed` (by ceiling).
pub fn measurement_claim_report(
    spec: &BlockSpec,
    k0: usize,
    delta: f64,
    claimed: f64,
) -> Result<ClaimReport> {
    let n = spec.n();
    let kbar = spec.mean_sparsities();
    let mean_total: f64 = kbar.iter().sum();
    let k0f = k0 as f64;
    let candidates: Vec<(&'static str, &'static str, Vec<f64>)> = vec![
        ("single_block_k0", "g = 1 with k̄ = k0", vec![k0f]),
        (
            "per_block_mean",
            "per-block k̄_i = n_i·p_i from the layout",
            kbar.clone(),
        ),
        (
            "per_block_scaled_to_k0",
            "per-block k̄_i rescaled so that Σk̄_i = k0",
            kbar.iter().map(|k| k * k0f / mean_total).collect(),
        ),
        (
            "equal_split_k0",
            "k0 split evenly across the g blocks",
            vec![k0f / spec.num_blocks() as f64; spec.num_blocks()],
        ),
        (
            "single_block_2k0",
            "g = 1 with RIP order read as 2·k0",
            vec![2.0 * k0f],
        ),
    ];
    let mut interpretations = Vec::new();
    for (name, description, sparsities) in candidates {
        if sparsities.iter().any(|k| *k <= 0.0) {
            continue;
        }
        let profile = RipProfile::uniform(sparsities.clone(), delta)?;
        let Ok(b) = min_measurements(&profile, n) else {
            continue;
        };
        interpretations.push(BoundInterpretation {
            name,
            description,
            sparsities,
            delta,
            bound: b.bound,
            ceiling: b.ceiling,
        });
    }
    let reproduced = interpretations
        .iter()
        .any(|i| (i.ceiling as f64 - claimed).abs() < 0.5);
    Ok(ClaimReport {
        claimed,
        reproduced,
        interpretations,
    })
}

/// `ln C(n, k)` through log-gamma.
fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial probability `C(n,k) q^k (1−q)^{n−k}`, evaluated in log space.
pub fn binomial_pmf(n: usize, k: usize, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if q <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * q.ln() + (n - k) as f64 * (1.0 - q).ln()).exp()
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "occupancy probability {q} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Probability that block `j` realizes more occupied bands than block `i`:
/// `Σ_{k=1}^{min(n_i,n_j)} Σ_{l=0}^{k−1} Bin(n_i,l;q_i)·Bin(n_j,k;q_j)`.
pub fn swap_probability(n_i: usize, q_i: f64, n_j: usize, q_j: f64) -> Result<f64> {
    check_q(q_i)?;
    check_q(q_j)?;
    let mut cdf_i = 0.0;
    let mut total = 0.0;
    for k in 1..=n_i.min(n_j) {
        cdf_i += binomial_pmf(n_i, k - 1, q_i);
        total += cdf_i * binomial_pmf(n_j, k, q_j);
    }
    Ok(total.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Sort blocks by `n_i·q_i` descending before evaluating.
    #[default]
    Reorder,
    /// Reject input that is not already sorted.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceProbability {
    /// `1 − Σ_{i<j} swap(i, j)`, clamped to `[0, 1]`.
    pub probability: f64,
    /// The union-bound value before clamping.
    pub unclamped: f64,
    pub reordered: bool,
}

/// Probability that the weighted program is no worse than plain ℓ1, from the
/// pairwise swap probabilities of blocks ordered by `n_i·q_i` descending.
pub fn dominance_probability(
    blocks: &[(usize, f64)],
    policy: OrderPolicy,
) -> Result<DominanceProbability> {
    for &(_, q) in blocks {
        check_q(q)?;
    }
    let mut ordered = blocks.to_vec();
    let sorted = blocks
        .windows(2)
        .all(|w| w[0].0 as f64 * w[0].1 >= w[1].0 as f64 * w[1].1);
    if !sorted {
        match policy {
            OrderPolicy::Strict => {
                return Err(Error::Precondition(
                    "blocks must be ordered by n_i·q_i descending".into(),
                ))
            }
            OrderPolicy::Reorder => {
                ordered.sort_by(|a, b| (b.0 as f64 * b.1).total_cmp(&(a.0 as f64 * a.1)));
            }
        }
    }
    let mut violation = 0.0;
    for i in 0..ordered.len() {
        for j in i + 1..ordered.len() {
            let (ni, qi) = ordered[i];
            let (nj, qj) = ordered[j];
            violation += swap_probability(ni, qi, nj, qj)?;
        }
    }
    let unclamped = 1.0 - violation;
    Ok(DominanceProbability {
        probability: unclamped.clamp(0.0, 1.0),
        unclamped,
        reordered: !sorted,
    })
}

/// [`dominance_probability`] with `q_i = p_i` taken from a layout.
pub fn dominance_probability_for_spec(spec: &BlockSpec) -> Result<DominanceProbability> {
    let blocks: Vec<(usize, f64)> = spec.blocks().iter().map(|b| (b.size, b.p)).collect();
    dominance_probability(&blocks, OrderPolicy::Reorder)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub c0: f64,
    pub c1: f64,
}

/// Constants of `‖x̂ − x₀‖ ≤ C0·ε + C1·σ_k(x₀)/√k` given RIP constants
/// `δ_{ak}` and `δ_{(a+1)k}`; requires `a > 1` and `δ_{ak} + a·δ_{(a+1)k} < a − 1`.
pub fn stability_constants(delta_ak: f64, delta_a1k: f64, a: f64) -> Result<StabilityConstants> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::Precondition(format!("a must exceed 1, got {a}")));
    }
    for (name, d) in [("delta_ak", delta_ak), ("delta_(a+1)k", delta_a1k)] {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::Precondition(format!(
                "{name} must lie in [0, 1), got {d}"
            )));
        }
    }
    if delta_ak + a * delta_a1k >= a - 1.0 {
        return Err(Error::Precondition(format!(
            "delta_ak + a·delta_(a+1)k < a − 1 fails: {} >= {}",
            delta_ak + a * delta_a1k,
            a - 1.0
        )));
    }
    let lo = (1.0 - delta_a1k).sqrt();
    let hi = (1.0 + delta_ak).sqrt();
    let sa = a.sqrt();
    let den0 = lo - hi / sa;
    let den1 = sa * lo - hi;
    if den0 <= 0.0 || den1 <= 0.0 {
        return Err(Error::Precondition("vanishing denominator".into()));
    }
    Ok(StabilityConstants {
        c0: 2.0 * (1.0 + 1.0 / sa) / den0,
        c1: (2.0 * lo + hi / sa) / den1,
    })
}
