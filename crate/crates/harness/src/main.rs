use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wcs_core::bounds::{
    dominance_probability, measurement_claim_report, min_measurements_in_base, stability_constants,
    swap_probability, OrderPolicy, RipProfile,
};
use wcs_core::solvers::compute_weights;
use wcs_core::spectrum::{chernoff_tail_bound, occupancy_pmf, select_sparsity_level};
use wcs_harness::config::{load_config, OutputFormat};
use wcs_harness::output::{extension, render};
use wcs_harness::{ExperimentConfig, Figure, Harness};

#[derive(Parser)]
#[command(
    name = "wcs",
    version,
    about = "Weighted ℓ1 compressive spectrum sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a figure sweep and write its records.
    Simulate(SimulateArgs),
    /// Evaluate an analytical bound and print JSON.
    Bounds {
        #[command(subcommand)]
        calc: BoundsCmd,
    },
    /// Print the exact occupancy distribution of the configured layout.
    Pmf(ConfigArg),
    /// Print the block weights of the configured layout.
    Weights(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// Config file (`-` for stdin); defaults to the shipped reference config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Mse,
    Epg,
    Roc,
    Sparsity,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct SimulateArgs {
    figure: FigureArg,
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output file, or `-` for stdout. Defaults to `<output.path>/<figure>.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Minimum measurement count for per-block mean sparsities.
    MinM {
        /// Per-block mean sparsity; repeat for several blocks.
        #[arg(long = "kbar", required = true, num_args = 1..)]
        kbar: Vec<f64>,
        /// RIP constant, shared by all blocks.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = std::f64::consts::E)]
        base: f64,
    },
    /// Probability that the weighted program does no worse than plain ℓ1.
    Dominance {
        /// Block as `size:q`; repeat per block. Defaults to the config layout.
        #[arg(long = "block", value_parser = parse_block)]
        blocks: Vec<(usize, f64)>,
        /// Reject blocks not ordered by n·q descending instead of sorting them.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Probability that block j realizes more occupied bands than block i.
    Swap {
        #[arg(long)]
        ni: usize,
        #[arg(long)]
        qi: f64,
        #[arg(long)]
        nj: usize,
        #[arg(long)]
        qj: f64,
    },
    /// Stability constants C0 and C1.
    Stability {
        #[arg(long, default_value_t = 0.0)]
        delta_ak: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_a1k: f64,
        #[arg(long, default_value_t = 3.0)]
        a: f64,
    },
    /// Chernoff lower bound on Pr(X ≤ k0) and the sparsity level for `alpha`.
    Chernoff {
        #[arg(long)]
        k0: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Evaluate a claimed measurement count under several readings of the bound.
    Claim {
        #[arg(long, default_value_t = 25)]
        k0: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 29.0)]
        claimed: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn parse_block(s: &str) -> Result<(usize, f64), String> {
    let (n, q) = s
        .split_once(':')
        .ok_or_else(|| format!("expected size:q, got {s:?}"))?;
    let n = n
        .trim()
        .parse()
        .map_err(|e| format!("block size {n:?}: {e}"))?;
    let q = q
        .trim()
        .parse()
        .map_err(|e| format!("block probability {q:?}: {e}"))?;
    Ok((n, q))
}

fn config(arg: &ConfigArg) -> Result<ExperimentConfig> {
    match &arg.config {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ExperimentConfig::reference()),
    }
}

fn print_json(out: &mut dyn Write, v: serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &v)?;
    writeln!(out)?;
    Ok(())
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.experiment.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.experiment.trials = t;
    }
    if let Some(w) = args.workers {
        cfg.experiment.workers = w;
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        };
    }
    cfg.validate()?;
    let figure = match args.figure {
        FigureArg::Mse => Figure::Mse,
        FigureArg::Epg => Figure::Epg,
        FigureArg::Roc => Figure::Roc,
        FigureArg::Sparsity => Figure::Sparsity,
    };
    let harness = Harness::new(cfg)?;
    let records = match figure {
        Figure::Mse => harness.run_mse_sweep(),
        Figure::Epg => harness.run_epg_sweep(),
        Figure::Roc => harness.run_roc(),
        Figure::Sparsity => harness.run_sparsity_figure(),
    };
    let cfg = harness.config();
    let text = render(cfg.output.format, figure, cfg, &records);
    let path = args.out.unwrap_or_else(|| {
        cfg.output.path.join(format!(
            "{}.{}",
            figure.as_str(),
            extension(cfg.output.format)
        ))
    });
    if path == Path::new("-") {
        out.write_all(text.as_bytes())?;
    } else {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {} records to {}", records.len(), path.display());
    }
    Ok(())
}

fn bounds(calc: BoundsCmd, out: &mut dyn Write) -> Result<()> {
    match calc {
        BoundsCmd::MinM {
            kbar,
            delta,
            n,
            base,
        } => {
            let profile = RipProfile::uniform(kbar, delta)?;
            print_json(
                out,
                serde_json::to_value(min_measurements_in_base(&profile, n, base)?)?,
            )
        }
        BoundsCmd::Dominance {
            blocks,
            strict,
            config: c,
        } => {
            let blocks = if blocks.is_empty() {
                config(&c)?
                    .spectrum
                    .blocks()
                    .iter()
                    .map(|b| (b.size, b.p))
                    .collect()
            } else {
                blocks
            };
            let policy = if strict {
                OrderPolicy::Strict
            } else {
                OrderPolicy::Reorder
            };
            print_json(
                out,
                serde_json::to_value(dominance_probability(&blocks, policy)?)?,
            )
        }
        BoundsCmd::Swap { ni, qi, nj, qj } => print_json(
            out,
            json!({
                "swap_probability": swap_probability(ni, qi, nj, qj)?,
            }),
        ),
        BoundsCmd::Stability {
            delta_ak,
            delta_a1k,
            a,
        } => print_json(
            out,
            serde_json::to_value(stability_constants(delta_ak, delta_a1k, a)?)?,
        ),
        BoundsCmd::Chernoff {
            k0,
            alpha,
            config: c,
        } => {
            let cfg = config(&c)?;
            let alpha = alpha.unwrap_or(cfg.experiment.alpha);
            let level = select_sparsity_level(&cfg.spectrum, alpha)?;
            let k0 = k0.unwrap_or(level.k0 as f64);
            let b = chernoff_tail_bound(k0, &cfg.spectrum);
            let exact = (k0 >= 0.0).then(|| occupancy_pmf(&cfg.spectrum).cdf(k0.floor() as usize));
            print_json(
                out,
                json!({
                    "k0": k0,
                    "mean": cfg.spectrum.expected_occupancy(),
                    "bound": b.value,
                    "informative": b.informative,
                    "exact_cdf": exact,
                    "alpha": alpha,
                    "selected_k0": level.k0,
                    "saturated": level.saturated,
                }),
            )
        }
        BoundsCmd::Claim {
            k0,
            delta,
            claimed,
            config: c,
        } => {
            let cfg = config(&c)?;
            print_json(
                out,
                serde_json::to_value(measurement_claim_report(&cfg.spectrum, k0, delta, claimed)?)?,
            )
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args, out),
        Command::Bounds { calc } => bounds(calc, out),
        Command::Pmf(c) => {
            let cfg = config(&c)?;
            let pmf = occupancy_pmf(&cfg.spectrum);
            print_json(
                out,
                json!({
                    "n": cfg.spectrum.n(),
                    "mean": pmf.mean(),
                    "pmf": pmf.probabilities,
                }),
            )
        }
        Command::Weights(c) => {
            let cfg = config(&c)?;
            let w = compute_weights(&cfg.spectrum)?;
            print_json(
                out,
                json!({
                    "mean_sparsities": cfg.spectrum.mean_sparsities(),
                    "weights": w.block(),
                }),
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}

fn error_json(e: &anyhow::Error) -> serde_json::Value {
    json!({
        "error": format!("{e}"),
        "chain": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}
