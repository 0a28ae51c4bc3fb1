use nalgebra::DVector;

use super::linalg::{columns, lstsq_pinv, lstsq_qr, top_k};
use super::{RecoveryResult, SolverId};
use crate::error::{Error, Result};
use crate::sensing::SensingSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpOptions {
    /// Maximum number of selected atoms; must not exceed `m`.
    pub k_max: usize,
    /// Stop once `‖y − A x‖₂` drops to this level.
    pub residual_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosampOptions {
    /// Target sparsity; the output has at most `k` nonzeros.
    pub k: usize,
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl CosampOptions {
    pub fn new(k: usize, residual_tol: f64) -> Self {
        Self {
            k,
            residual_tol,
            max_iter: 100,
        }
    }
}

fn check_y(sys: &SensingSystem, y: &[f64]) -> Result<DVector<f64>> {
    if y.len() != sys.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for a {}-row sensing matrix",
            y.len(),
            sys.m()
        )));
    }
    Ok(DVector::from_column_slice(y))
}

fn scatter(n: usize, support: &[usize], coef: &DVector<f64>) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&i, v) in support.iter().zip(coef.iter()) {
        x[i] = *v;
    }
    x
}

fn finish(
    sys: &SensingSystem,
    y: &[f64],
    x_hat: Vec<f64>,
    iterations: usize,
    converged: bool,
    id: SolverId,
) -> RecoveryResult {
    RecoveryResult {
        residual_norm: sys.residual_norm(&x_hat, y),
        objective: x_hat.iter().map(|v| v.abs()).sum(),
        x_hat,
        iterations,
        converged,
        certified: false,
        solver: id,
    }
}

/// Orthogonal matching pursuit. Each step adds the column most correlated
/// with the residual (lowest index on ties) and refits by least squares.
pub fn omp(sys: &SensingSystem, y: &[f64], opts: &OmpOptions) -> Result<RecoveryResult> {
    let (m, n) = (sys.m(), sys.n());
    let yv = check_y(sys, y)?;
    if opts.k_max > m {
        return Err(Error::InvalidArgument(format!(
            "OMP k_max {} exceeds measurement count {m}",
            opts.k_max
        )));
    }
    let a = sys.matrix();
    let mut support: Vec<usize> = Vec::new();
    let mut coef = DVector::zeros(0);
    let mut residual = yv.clone();

    while support.len() < opts.k_max && residual.norm() > opts.residual_tol {
        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if support.contains(&j) {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((j, _)) = best else { break };
        support.push(j);
        coef = lstsq_qr(&columns(a, &support), &yv)?;
        residual = &yv - columns(a, &support) * &coef;
    }

    let iterations = support.len();
    Ok(finish(
        sys,
        y,
        scatter(n, &support, &coef),
        iterations,
        true,
        SolverId::Omp,
    ))
}

/// Compressive sampling matching pursuit.
///
/// Each iteration merges the `2k` largest proxy entries `Aᵀr` with the
/// current support, solves least squares on the merged set (minimum norm
/// when it has more than `m` columns) and prunes to the `k` largest. Stops
/// on the residual tolerance or when the residual stops decreasing; the best
/// iterate is returned.
pub fn cosamp(sys: &SensingSystem, y: &[f64], opts: &CosampOptions) -> Result<RecoveryResult> {
    let n = sys.n();
    let yv = check_y(sys, y)?;
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidArgument(format!(
            "CoSaMP sparsity must satisfy 1 <= k <= n (got k={}, n={n})",
            opts.k
        )));
    }
    let a = sys.matrix();
    let mut x = vec![0.0; n];
    let mut best_norm = yv.norm();
    let mut residual = yv.clone();
    let mut iterations = 0;
    let mut converged = best_norm <= opts.residual_tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let proxy = a.tr_mul(&residual);
        let mut merged = top_k(proxy.as_slice(), (2 * opts.k).min(n));
        merged.extend(
            x.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i),
        );
        merged.sort_unstable();
        merged.dedup();

        let b = lstsq_pinv(&columns(a, &merged), &yv);
        let full = scatter(n, &merged, &b);
        let keep = top_k(&full, opts.k);
        let candidate: Vec<f64> = (0..n)
            .map(|i| {
                if keep.binary_search(&i).is_ok() {
                    full[i]
                } else {
                    0.0
                }
            })
            .collect();

        let cand_res = &yv - a * DVector::from_column_slice(&candidate);
        let cand_norm = cand_res.norm();
        if !cand_norm.is_finite() {
            return Err(Error::RankDeficient {
                support: merged.len(),
            });
        }
        if cand_norm >= best_norm * (1.0 - 1e-12) {
            // Stagnation: no further progress.
            converged = true;
            break;
        }
        x = candidate;
        residual = cand_res;
        best_norm = cand_norm;
        if best_norm <= opts.residual_tol {
            converged = true;
        }
    }

    Ok(finish(sys, y, x, iterations, converged, SolverId::Cosamp))
}
