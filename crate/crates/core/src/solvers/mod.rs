//! Sparse recovery: the block-weighted ℓ1 program, plain ℓ1, OMP and CoSaMP.

mod greedy;
mod linalg;
mod weighted_l1;
mod weights;

use serde::{Deserialize, Serialize};

pub use greedy::{cosamp, omp, CosampOptions, OmpOptions};
pub use weighted_l1::{solve_l1, solve_weighted_l1, L1Options};
pub use weights::{compute_weights, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverId {
    WeightedL1,
    Lasso,
    Omp,
    Cosamp,
}

impl SolverId {
    pub const ALL: [SolverId; 4] = [
        SolverId::WeightedL1,
        SolverId::Lasso,
        SolverId::Omp,
        SolverId::Cosamp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::WeightedL1 => "weighted_l1",
            SolverId::Lasso => "lasso",
            SolverId::Omp => "omp",
            SolverId::Cosamp => "cosamp",
        }
    }
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown solver `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    /// `‖A·x̂ − y‖₂`.
    pub residual_norm: f64,
    /// Weighted ℓ1 norm for the convex solvers, plain ℓ1 norm for the greedy ones.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The convex solution carries a verified KKT certificate.
    pub certified: bool,
    pub solver: SolverId,
}

impl RecoveryResult {
    pub fn support(&self) -> Vec<usize> {
        self.x_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn error_norm(&self, truth: &[f64]) -> f64 {
        self.x_hat
            .iter()
            .zip(truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
