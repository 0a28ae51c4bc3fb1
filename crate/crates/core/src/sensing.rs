//! Sub-Gaussian sensing matrices and noisy sub-Nyquist measurements.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumInstance;

/// Smallest singular value accepted for a full-row-rank sensing matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;

const MAX_REDRAWS: usize = 64;

/// The m×n sensing operator applied to the frequency-domain vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSystem {
    a: DMatrix<f64>,
}

impl SensingSystem {
    /// Wraps an arbitrary matrix, checking `m <= n` and full row rank.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!(
                "sensing matrix must satisfy 1 <= m <= n (got {m}x{n})"
            )));
        }
        let sigma_min = smallest_singular_value(&a);
        if sigma_min <= RANK_TOLERANCE {
            return Err(Error::SingularSensing { sigma_min });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n());
        let v = &self.a * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// Row-per-line CSV of the matrix entries, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.a.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn residual_norm(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    let svd = a.clone().svd(false, false);
    svd.singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// I.i.d. ±1/√m entries (zero mean, variance 1/m). A draw that is not of
/// full row rank is discarded and redrawn from the same stream.
pub fn generate_sensing_matrix<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<SensingSystem> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "measurement count must satisfy 1 <= m <= n (got m={m}, n={n})"
        )));
    }
    let entry = 1.0 / (m as f64).sqrt();
    let mut last = Error::SingularSensing { sigma_min: 0.0 };
    for _ in 0..MAX_REDRAWS {
        let a = DMatrix::from_fn(
            m,
            n,
            |_, _| if rng.random::<bool>() { entry } else { -entry },
        );
        match SensingSystem::from_matrix(a) {
            Ok(sys) => return Ok(sys),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// How the noise level of a measurement set is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// Per-component standard deviation.
    Sigma(f64),
    /// `‖Ax‖² / E‖η‖²` in dB.
    SensingSnrDb(f64),
    /// `‖x‖² / E‖η‖²` in dB.
    ReceivedSnrDb(f64),
}

/// Residual budget `ε` of the recovery constraint `‖Ax − y‖ ≤ ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonRule {
    /// `ε = σ·√(m + sds·√(2m))`: the χ²_m mean plus `sds` standard deviations.
    /// `sds = 2` covers the noise in about 96.5% of draws at m = 27, tending
    /// to 97.7% as m grows.
    ChiBound {
        sds: f64,
    },
    Fixed {
        value: f64,
    },
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::ChiBound { sds: 2.0 }
    }
}

impl EpsilonRule {
    pub fn epsilon(&self, sigma: f64, m: usize) -> f64 {
        match *self {
            EpsilonRule::ChiBound { sds } => {
                let m = m as f64;
                sigma * (m + sds * (2.0 * m).sqrt()).max(0.0).sqrt()
            }
            EpsilonRule::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementSet {
    pub y: Vec<f64>,
    /// Noise-free part `Ax`.
    pub clean: Vec<f64>,
    pub eta: Vec<f64>,
    pub noise_sigma: f64,
    pub epsilon: f64,
}

impl MeasurementSet {
    pub fn noise_norm(&self) -> f64 {
        norm(&self.eta)
    }

    pub fn sensing_snr_db(&self) -> Result<f64> {
        sensing_snr(&self.clean, &self.eta)
    }
}

/// Synthesizes `y = Ax + η` with i.i.d. Gaussian `η`.
///
/// For SNR targets the noise standard deviation is calibrated against the
/// realized signal energy so that the ratio holds with `E‖η‖² = mσ²`.
pub fn acquire_measurements<R: Rng + ?Sized>(
    sys: &SensingSystem,
    inst: &SpectrumInstance,
    target: NoiseTarget,
    rule: EpsilonRule,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if inst.n() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "instance has {} bands but the sensing matrix has {} columns",
            inst.n(),
            sys.n()
        )));
    }
    let m = sys.m();
    let clean = sys.apply(&inst.x);
    let sigma = match target {
        NoiseTarget::Sigma(s) => {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "noise sigma {s} is invalid"
                )));
            }
            s
        }
        NoiseTarget::SensingSnrDb(db) => sigma_for_power(norm_sq(&clean), m, db)?,
        NoiseTarget::ReceivedSnrDb(db) => sigma_for_power(inst_power(inst), m, db)?,
    };
    let eta: Vec<f64> = (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect();
    let y = clean.iter().zip(&eta).map(|(c, e)| c + e).collect();
    Ok(MeasurementSet {
        y,
        clean,
        eta,
        noise_sigma: sigma,
        epsilon: rule.epsilon(sigma, m),
    })
}

fn sigma_for_power(power: f64, m: usize, db: f64) -> Result<f64> {
    if power <= 0.0 {
        return Err(Error::ZeroSignal);
    }
    let ratio = 10f64.powf(db / 10.0);
    Ok((power / (m as f64 * ratio)).sqrt())
}

fn inst_power(inst: &SpectrumInstance) -> f64 {
    inst.amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// `10·log10(‖x‖² / ‖η‖²)` using the frequency-domain signal power.
pub fn received_snr(inst: &SpectrumInstance, eta: &[f64]) -> Result<f64> {
    ratio_db(inst_power(inst), norm_sq(eta))
}

/// `10·log10(‖Ax‖² / ‖η‖²)`.
pub fn sensing_snr(clean: &[f64], eta: &[f64]) -> Result<f64> {
    ratio_db(norm_sq(clean), norm_sq(eta))
}

fn ratio_db(signal: f64, noise: f64) -> Result<f64> {
    if noise <= 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok(10.0 * (signal / noise).log10())
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}
