//! Monte-Carlo sweeps behind each figure.
//!
//! Every trial draws its occupancy, sensing matrix and noise from streams
//! keyed by `(root seed, sweep point, trial, stream tag)`, and every enabled
//! solver decodes the same measurements. Trials run in parallel but are
//! collected in trial order, so the output never depends on scheduling.

use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use wcs_core::detection::{decide_and_score, detection_threshold};
use wcs_core::seeding::{stream, tag};
use wcs_core::sensing::{
    acquire_measurements, generate_sensing_matrix, received_snr, sensing_snr, NoiseTarget,
};
use wcs_core::solvers::{
    compute_weights, cosamp, omp, solve_l1, solve_weighted_l1, CosampOptions, L1Options,
    OmpOptions, SolverId, WeightVector,
};
use wcs_core::spectrum::{
    chernoff_tail_bound, occupancy_pmf, sample_occupancy, select_sparsity_level, SpectrumInstance,
};

use crate::config::{ExperimentConfig, SnrMode};
use crate::stats::Summary;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] wcs_core::Error),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Mse,
    Epg,
    Roc,
    Sparsity,
}

impl Figure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Figure::Mse => "mse",
            Figure::Epg => "epg",
            Figure::Roc => "roc",
            Figure::Sparsity => "sparsity",
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SweepRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    pub point: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_mode: Option<SnrMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pf_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonconverged: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_error: Option<f64>,
    /// Error percentage gain of the weighted solver over this row's solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epg_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epg_ci95: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epg_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_iterations: Option<f64>,
    /// Realized SNR in the configured mode, averaged in dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_realized_snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chernoff_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informative: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_cdf: Option<f64>,
    /// Logged, never written, so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub m: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x_hat: Vec<f64>,
    pub error: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub instance: SpectrumInstance,
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub noise_norm: f64,
    pub realized_snr_db: Option<f64>,
    /// One entry per enabled solver, in config order. `Err` holds the
    /// failure message (also used when the trial itself could not be drawn).
    pub solves: Vec<Result<SolveOutcome, String>>,
}

/// Runs sweeps for one configuration.
pub struct Harness {
    cfg: ExperimentConfig,
    weights: Option<WeightVector>,
    greedy_k: usize,
    l1: L1Options,
    pool: rayon::ThreadPool,
}

impl Harness {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, HarnessError> {
        let weights = if cfg.solvers.enabled.contains(&SolverId::WeightedL1) {
            Some(compute_weights(&cfg.spectrum)?)
        } else {
            None
        };
        let greedy_k = match cfg.solvers.greedy_sparsity {
            Some(k) => k,
            None => select_sparsity_level(&cfg.spectrum, cfg.experiment.alpha)?
                .k0
                .max(1),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.experiment.workers)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;
        let l1 = cfg.solvers.l1_options();
        Ok(Self {
            cfg,
            weights,
            greedy_k,
            l1,
            pool,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn greedy_sparsity(&self) -> usize {
        self.greedy_k
    }

    pub fn solvers(&self) -> &[SolverId] {
        &self.cfg.solvers.enabled
    }

    /// Index of `id` in the per-trial solve list.
    pub fn solver_slot(&self, id: SolverId) -> Option<usize> {
        self.cfg.solvers.enabled.iter().position(|s| *s == id)
    }

    fn noise_target(&self, snr_db: f64) -> NoiseTarget {
        match self.cfg.sensing.snr_mode {
            SnrMode::Sensing => NoiseTarget::SensingSnrDb(snr_db),
            SnrMode::Received => NoiseTarget::ReceivedSnrDb(snr_db),
        }
    }

    /// All trials of one sweep point, in trial order.
    pub fn run_point(&self, point: SweepPoint) -> Vec<TrialOutcome> {
        let trials = self.cfg.experiment.trials;
        self.pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| self.run_trial(point, t))
                .collect()
        })
    }

    pub fn run_trial(&self, point: SweepPoint, trial: usize) -> TrialOutcome {
        let root = self.cfg.experiment.seed;
        let path = |tag: u64| [point.index as u64, trial as u64, tag];
        let n = self.cfg.spectrum.n();
        let instance = sample_occupancy(
            &self.cfg.spectrum,
            &self.cfg.signal,
            &mut stream(root, &path(tag::OCCUPANCY)),
        );
        let fail = |instance: SpectrumInstance, msg: String| TrialOutcome {
            trial,
            instance,
            noise_sigma: f64::NAN,
            epsilon: f64::NAN,
            noise_norm: f64::NAN,
            realized_snr_db: None,
            solves: vec![Err(msg); self.cfg.solvers.enabled.len()],
        };
        let sys = match generate_sensing_matrix(point.m, n, &mut stream(root, &path(tag::MATRIX))) {
            Ok(s) => s,
            Err(e) => return fail(instance, e.to_string()),
        };
        let meas = match acquire_measurements(
            &sys,
            &instance,
            self.noise_target(point.snr_db),
            self.cfg.sensing.epsilon,
            &mut stream(root, &path(tag::NOISE)),
        ) {
            Ok(m) => m,
            Err(e) => return fail(instance, e.to_string()),
        };
        let realized_snr_db = match self.cfg.sensing.snr_mode {
            SnrMode::Sensing => sensing_snr(&meas.clean, &meas.eta).ok(),
            SnrMode::Received => received_snr(&instance, &meas.eta).ok(),
        };
        let k = self.greedy_k.min(point.m);
        let solves = self
            .cfg
            .solvers
            .enabled
            .iter()
            .map(|id| {
                let r = match id {
                    SolverId::WeightedL1 => solve_weighted_l1(
                        &sys,
                        &meas.y,
                        meas.epsilon,
                        self.weights.as_ref().expect("weights built when enabled"),
                        &self.l1,
                    ),
                    SolverId::Lasso => solve_l1(&sys, &meas.y, meas.epsilon, &self.l1),
                    SolverId::Omp => omp(
                        &sys,
                        &meas.y,
                        &OmpOptions {
                            k_max: k,
                            residual_tol: meas.epsilon,
                        },
                    ),
                    SolverId::Cosamp => cosamp(
                        &sys,
                        &meas.y,
                        &CosampOptions {
                            k,
                            residual_tol: meas.epsilon,
                            max_iter: self.cfg.solvers.cosamp_max_iter,
                        },
                    ),
                };
                r.map(|r| SolveOutcome {
                    error: r.error_norm(&instance.x),
                    converged: r.converged,
                    iterations: r.iterations,
                    residual_norm: r.residual_norm,
                    x_hat: r.x_hat,
                })
                .map_err(|e| e.to_string())
            })
            .collect();
        TrialOutcome {
            trial,
            noise_sigma: meas.noise_sigma,
            epsilon: meas.epsilon,
            noise_norm: meas.noise_norm(),
            realized_snr_db,
            instance,
            solves,
        }
    }

    fn include(&self, s: &SolveOutcome) -> bool {
        s.converged || !self.cfg.solvers.exclude_nonconverged
    }

    /// Error and EPG summaries per solver for one sweep point.
    fn summarize(
        &self,
        figure: Figure,
        point: SweepPoint,
        trials: &[TrialOutcome],
    ) -> Vec<SweepRecord> {
        let weighted = self.solver_slot(SolverId::WeightedL1);
        let snrs: Vec<f64> = trials.iter().filter_map(|t| t.realized_snr_db).collect();
        let mean_snr = Summary::of(&snrs).map(|s| s.mean);
        self.cfg
            .solvers
            .enabled
            .iter()
            .enumerate()
            .map(|(slot, &id)| {
                let mut errors = Vec::new();
                let mut iterations = Vec::new();
                let mut failed = 0;
                let mut nonconverged = 0;
                let mut epg = Vec::new();
                for t in trials {
                    let s = match &t.solves[slot] {
                        Ok(s) => s,
                        Err(_) => {
                            failed += 1;
                            continue;
                        }
                    };
                    if !s.converged {
                        nonconverged += 1;
                    }
                    if !self.include(s) {
                        continue;
                    }
                    errors.push(s.error);
                    iterations.push(s.iterations as f64);
                    if let Some(Ok(w)) = weighted.map(|w| &t.solves[w]) {
                        if self.include(w) && s.error > 0.0 {
                            epg.push((s.error - w.error) / s.error * 100.0);
                        }
                    }
                }
                let err = Summary::of(&errors);
                let gain = Summary::of(&epg);
                SweepRecord {
                    figure: Some(figure),
                    point: point.index,
                    m: Some(point.m),
                    snr_db: Some(point.snr_db),
                    snr_mode: Some(self.cfg.sensing.snr_mode),
                    solver: Some(id),
                    trials: Some(trials.len()),
                    failed: Some(failed),
                    nonconverged: Some(nonconverged),
                    mean_error: err.map(|s| s.mean),
                    std_error: err.map(|s| s.std),
                    ci95_error: err.map(|s| s.ci95),
                    epg_mean: weighted.and(gain.map(|s| s.mean)),
                    epg_ci95: weighted.and(gain.map(|s| s.ci95)),
                    epg_trials: weighted.map(|_| epg.len()),
                    mean_iterations: Summary::of(&iterations).map(|s| s.mean),
                    mean_realized_snr_db: mean_snr,
                    ..Default::default()
                }
            })
            .collect()
    }

    fn sweep(&self, figure: Figure, points: Vec<SweepPoint>) -> Vec<SweepRecord> {
        let mut out = Vec::new();
        for p in points {
            let start = Instant::now();
            let trials = self.run_point(p);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            info!(
                "{} point {} (m={}, snr={} dB): {} trials in {:.0} ms",
                figure.as_str(),
                p.index,
                p.m,
                p.snr_db,
                trials.len(),
                wall_ms
            );
            out.extend(self.summarize(figure, p, &trials).into_iter().map(|mut r| {
                r.wall_ms = wall_ms;
                r
            }));
        }
        out
    }

    pub fn mse_points(&self) -> Vec<SweepPoint> {
        let o = &self.cfg.figures.mse;
        let ms = o.m.as_ref().unwrap_or(&self.cfg.sensing.m).values();
        let snrs = o
            .snr_db
            .as_ref()
            .unwrap_or(&self.cfg.sensing.snr_db)
            .values();
        grid(&ms, &snrs)
    }

    pub fn epg_points(&self) -> Vec<SweepPoint> {
        let o = &self.cfg.figures.epg;
        let ms = o.m.as_ref().unwrap_or(&self.cfg.sensing.m).values();
        let snrs = o
            .snr_db
            .as_ref()
            .unwrap_or(&self.cfg.sensing.snr_db)
            .values();
        grid(&ms, &snrs)
    }

    pub fn roc_point(&self) -> SweepPoint {
        let r = &self.cfg.figures.roc;
        SweepPoint {
            index: 0,
            m: r.m.unwrap_or(self.cfg.sensing.m.values()[0]),
            snr_db: r.snr_db.unwrap_or(self.cfg.sensing.snr_db.values()[0]),
        }
    }

    /// Recovery error against the configured SNR (and m) grid.
    pub fn run_mse_sweep(&self) -> Vec<SweepRecord> {
        self.sweep(Figure::Mse, self.mse_points())
    }

    /// Error percentage gain against the configured measurement grid.
    pub fn run_epg_sweep(&self) -> Vec<SweepRecord> {
        self.sweep(Figure::Epg, self.epg_points())
    }

    /// Detection/false-alarm rates per solver over the false-alarm target grid.
    ///
    /// Recoveries are computed once at the ROC operating point and thresholded
    /// at every grid value, so all grid points share the same trials.
    pub fn run_roc(&self) -> Vec<SweepRecord> {
        let point = self.roc_point();
        let start = Instant::now();
        let trials = self.run_point(point);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        info!(
            "roc (m={}, snr={} dB): {} trials in {:.0} ms",
            point.m,
            point.snr_db,
            trials.len(),
            wall_ms
        );
        let mut out = Vec::new();
        for (gi, &pf_target) in self.cfg.figures.roc.pf_grid.iter().enumerate() {
            for (slot, &id) in self.cfg.solvers.enabled.iter().enumerate() {
                let (mut det, mut occ, mut fa, mut vac) = (0usize, 0usize, 0usize, 0usize);
                let mut thresholds = Vec::new();
                let (mut failed, mut nonconverged) = (0, 0);
                for t in &trials {
                    let Ok(s) = &t.solves[slot] else {
                        failed += 1;
                        continue;
                    };
                    if !s.converged {
                        nonconverged += 1;
                    }
                    if !self.include(s) {
                        continue;
                    }
                    let m = point.m;
                    let noise_energy = m as f64 * t.noise_sigma * t.noise_sigma;
                    let Ok(lambda) = detection_threshold(noise_energy, m, pf_target) else {
                        continue;
                    };
                    let Ok(rep) = decide_and_score(&s.x_hat, &t.instance, lambda) else {
                        continue;
                    };
                    thresholds.push(lambda);
                    det += rep.detected;
                    occ += rep.occupied;
                    fa += rep.false_alarms;
                    vac += rep.vacant;
                }
                out.push(SweepRecord {
                    figure: Some(Figure::Roc),
                    point: gi,
                    m: Some(point.m),
                    snr_db: Some(point.snr_db),
                    snr_mode: Some(self.cfg.sensing.snr_mode),
                    pf_target: Some(pf_target),
                    solver: Some(id),
                    trials: Some(trials.len()),
                    failed: Some(failed),
                    nonconverged: Some(nonconverged),
                    threshold_mean: Summary::of(&thresholds).map(|s| s.mean),
                    pd: (occ > 0).then(|| det as f64 / occ as f64),
                    pf: (vac > 0).then(|| fa as f64 / vac as f64),
                    wall_ms,
                    ..Default::default()
                });
            }
        }
        out
    }

    /// Chernoff lower bound on `Pr(X ≤ k0)` over the configured k0 range,
    /// with the exact probability alongside when requested.
    pub fn run_sparsity_figure(&self) -> Vec<SweepRecord> {
        sparsity_records(&self.cfg)
    }
}

pub fn sparsity_records(cfg: &ExperimentConfig) -> Vec<SweepRecord> {
    let s = &cfg.figures.sparsity;
    let pmf = s.exact_overlay.then(|| occupancy_pmf(&cfg.spectrum));
    (s.k0_min..=s.k0_max)
        .enumerate()
        .map(|(i, k0)| {
            let b = chernoff_tail_bound(k0 as f64, &cfg.spectrum);
            SweepRecord {
                figure: Some(Figure::Sparsity),
                point: i,
                k0: Some(k0),
                chernoff_bound: Some(b.value),
                informative: Some(b.informative),
                exact_cdf: pmf.as_ref().map(|p| p.cdf(k0)),
                ..Default::default()
            }
        })
        .collect()
}

fn grid(ms: &[usize], snrs: &[f64]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &m in ms {
        for &snr_db in snrs {
            out.push(SweepPoint {
                index: out.len(),
                m,
                snr_db,
            });
        }
    }
    out
}
