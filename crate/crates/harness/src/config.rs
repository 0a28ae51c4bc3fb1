//! Declarative experiment description, read from TOML.
//!
//! Unknown keys and duplicate keys are rejected; the TOML parser reports the
//! offending line and column.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use wcs_core::sensing::EpsilonRule;
use wcs_core::solvers::{L1Options, SolverId};
use wcs_core::spectrum::{AmplitudeLaw, BlockSpec};

/// The shipped reference configuration.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A scalar or a sweep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrMode {
    #[default]
    Sensing,
    Received,
}

impl SnrMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnrMode::Sensing => "sensing",
            SnrMode::Received => "received",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    pub m: OneOrMany<usize>,
    pub snr_db: OneOrMany<f64>,
    #[serde(default)]
    pub snr_mode: SnrMode,
    #[serde(default)]
    pub epsilon: EpsilonRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub enabled: Vec<SolverId>,
    /// Sparsity handed to OMP (atom cap) and CoSaMP; defaults to the k0
    /// selected from `experiment.alpha`.
    pub greedy_sparsity: Option<usize>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub polish: bool,
    pub cosamp_max_iter: usize,
    /// Drop non-converged solves from the means (they are always counted).
    pub exclude_nonconverged: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let l1 = L1Options::default();
        Self {
            enabled: SolverId::ALL.to_vec(),
            greedy_sparsity: None,
            abs_tol: l1.abs_tol,
            rel_tol: l1.rel_tol,
            feas_tol: l1.feas_tol,
            max_iter: l1.max_iter,
            polish: l1.polish,
            cosamp_max_iter: 100,
            exclude_nonconverged: false,
        }
    }
}

impl SolverSection {
    pub fn l1_options(&self) -> L1Options {
        L1Options {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            feas_tol: self.feas_tol,
            max_iter: self.max_iter,
            polish: self.polish,
            ..L1Options::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 1,
            alpha: 0.04,
            workers: 0,
        }
    }
}

/// Per-figure overrides of the sensing sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepOverride {
    pub m: Option<OneOrMany<usize>>,
    pub snr_db: Option<OneOrMany<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocSection {
    pub m: Option<usize>,
    pub snr_db: Option<f64>,
    #[serde(default = "default_pf_grid")]
    pub pf_grid: Vec<f64>,
}

impl Default for RocSection {
    fn default() -> Self {
        Self {
            m: None,
            snr_db: None,
            pf_grid: default_pf_grid(),
        }
    }
}

fn default_pf_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsitySection {
    pub k0_min: usize,
    pub k0_max: usize,
    pub exact_overlay: bool,
}

impl Default for SparsitySection {
    fn default() -> Self {
        Self {
            k0_min: 1,
            k0_max: 40,
            exact_overlay: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FigureSection {
    pub mse: SweepOverride,
    pub epg: SweepOverride,
    pub roc: RocSection,
    pub sparsity: SparsitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory; one file per figure.
    pub path: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("results"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spectrum: BlockSpec,
    #[serde(default)]
    pub signal: AmplitudeLaw,
    pub sensing: SensingSection,
    #[serde(default)]
    pub solvers: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub figures: FigureSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        parse_config(REFERENCE_CONFIG).expect("shipped config is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let n = self.spectrum.n();
        if self.experiment.trials == 0 {
            return bad("experiment.trials must be at least 1".into());
        }
        if !(self.experiment.alpha > 0.0 && self.experiment.alpha < 1.0) {
            return bad(format!(
                "experiment.alpha must lie in (0, 1), got {}",
                self.experiment.alpha
            ));
        }
        if self.solvers.enabled.is_empty() {
            return bad("solvers.enabled must name at least one solver".into());
        }
        let mut seen = self.solvers.enabled.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.solvers.enabled.len() {
            return bad("solvers.enabled lists a solver twice".into());
        }
        self.signal
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("signal: {e}")))?;
        let mut ms = self.sensing.m.values();
        let mut snrs = self.sensing.snr_db.values();
        for o in [&self.figures.mse, &self.figures.epg] {
            if let Some(m) = &o.m {
                ms.extend(m.values());
                if m.values().is_empty() {
                    return bad("sweep lists must be nonempty".into());
                }
            }
            if let Some(s) = &o.snr_db {
                snrs.extend(s.values());
                if s.values().is_empty() {
                    return bad("sweep lists must be nonempty".into());
                }
            }
        }
        ms.extend(self.figures.roc.m);
        snrs.extend(self.figures.roc.snr_db);
        if self.sensing.m.values().is_empty() || self.sensing.snr_db.values().is_empty() {
            return bad("sweep lists must be nonempty".into());
        }
        if let Some(m) = ms.iter().find(|&&m| m == 0 || m > n) {
            return bad(format!("measurement count {m} must lie in [1, {n}]"));
        }
        if let Some(s) = snrs.iter().find(|s| !s.is_finite()) {
            return bad(format!("SNR {s} is not finite"));
        }
        if self.figures.roc.pf_grid.is_empty() {
            return bad("figures.roc.pf_grid must be nonempty".into());
        }
        if let Some(p) = self
            .figures
            .roc
            .pf_grid
            .iter()
            .find(|p| !(**p > 0.0 && **p < 1.0))
        {
            return bad(format!("false-alarm target {p} must lie in (0, 1)"));
        }
        if self.figures.sparsity.k0_min > self.figures.sparsity.k0_max {
            return bad("figures.sparsity.k0_min exceeds k0_max".into());
        }
        if let Some(k) = self.solvers.greedy_sparsity {
            if k == 0 || k > n {
                return bad(format!("solvers.greedy_sparsity {k} must lie in [1, {n}]"));
            }
        }
        if self.solvers.max_iter == 0 || self.solvers.cosamp_max_iter == 0 {
            return bad("iteration limits must be positive".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config from `path`, or from stdin when `path` is `-`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
