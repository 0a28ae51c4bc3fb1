//! CSV and JSON-lines writers for sweep records.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::experiment::{Figure, SweepRecord};

/// Column layout per figure; fixed so plotting scripts can index by name.
pub fn columns(figure: Figure) -> &'static [&'static str] {
    match figure {
        Figure::Mse | Figure::Epg => &[
            "point",
            "m",
            "snr_db",
            "snr_mode",
            "solver",
            "trials",
            "failed",
            "nonconverged",
            "mean_error",
            "std_error",
            "ci95_error",
            "epg_mean",
            "epg_ci95",
            "epg_trials",
            "mean_iterations",
            "mean_realized_snr_db",
        ],
        Figure::Roc => &[
            "point",
            "m",
            "snr_db",
            "snr_mode",
            "pf_target",
            "solver",
            "trials",
            "failed",
            "nonconverged",
            "threshold_mean",
            "pd",
            "pf",
        ],
        Figure::Sparsity => &["point", "k0", "chernoff_bound", "informative", "exact_cdf"],
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cell(r: &SweepRecord, col: &str) -> String {
    match col {
        "point" => r.point.to_string(),
        "m" => opt(r.m),
        "snr_db" => opt(r.snr_db),
        "snr_mode" => opt(r.snr_mode.map(|s| s.as_str())),
        "pf_target" => opt(r.pf_target),
        "k0" => opt(r.k0),
        "solver" => opt(r.solver.map(|s| s.as_str())),
        "trials" => opt(r.trials),
        "failed" => opt(r.failed),
        "nonconverged" => opt(r.nonconverged),
        "mean_error" => opt(r.mean_error),
        "std_error" => opt(r.std_error),
        "ci95_error" => opt(r.ci95_error),
        "epg_mean" => opt(r.epg_mean),
        "epg_ci95" => opt(r.epg_ci95),
        "epg_trials" => opt(r.epg_trials),
        "threshold_mean" => opt(r.threshold_mean),
        "pd" => opt(r.pd),
        "pf" => opt(r.pf),
        "mean_iterations" => opt(r.mean_iterations),
        "mean_realized_snr_db" => opt(r.mean_realized_snr_db),
        "chernoff_bound" => opt(r.chernoff_bound),
        "informative" => opt(r.informative),
        "exact_cdf" => opt(r.exact_cdf),
        other => unreachable!("unknown column {other}"),
    }
}

/// Renders records as CSV. The first line is a `#` comment naming the
/// figure, the config hash and the root seed; missing values are empty cells.
pub fn render_csv(figure: Figure, cfg: &ExperimentConfig, records: &[SweepRecord]) -> String {
    let cols = columns(figure);
    let mut out = String::new();
    writeln!(
        out,
        "# wcs figure={} config_sha256={} seed={}",
        figure.as_str(),
        cfg.hash(),
        cfg.experiment.seed
    )
    .unwrap();
    out.push_str(&cols.join(","));
    out.push('\n');
    for r in records {
        let row: Vec<String> = cols.iter().map(|c| cell(r, c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One JSON object per record, preceded by a header object.
pub fn render_jsonl(figure: Figure, cfg: &ExperimentConfig, records: &[SweepRecord]) -> String {
    let mut out = serde_json::json!({
        "figure": figure,
        "config_sha256": cfg.hash(),
        "seed": cfg.experiment.seed,
    })
    .to_string();
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn render(
    format: OutputFormat,
    figure: Figure,
    cfg: &ExperimentConfig,
    records: &[SweepRecord],
) -> String {
    match format {
        OutputFormat::Csv => render_csv(figure, cfg, records),
        OutputFormat::Jsonl => render_jsonl(figure, cfg, records),
    }
}

pub fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Jsonl => "jsonl",
    }
}

pub fn write_records<W: Write>(
    w: &mut W,
    format: OutputFormat,
    figure: Figure,
    cfg: &ExperimentConfig,
    records: &[SweepRecord],
) -> io::Result<()> {
    w.write_all(render(format, figure, cfg, records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::sparsity_records;

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::reference();
        let recs = sparsity_records(&cfg);
        let csv = render_csv(Figure::Sparsity, &cfg, &recs);
        let mut lines = csv.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("# wcs figure=sparsity config_sha256="));
        assert!(head.contains(&cfg.hash()));
        assert_eq!(
            lines.next().unwrap(),
            "point,k0,chernoff_bound,informative,exact_cdf"
        );
        assert_eq!(lines.count(), recs.len());
    }

    #[test]
    fn jsonl_lines_parse() {
        let cfg = ExperimentConfig::reference();
        let recs = sparsity_records(&cfg);
        let text = render_jsonl(Figure::Sparsity, &cfg, &recs);
        for line in text.lines() {
            let _: serde_json::Value = serde_json::from_str(line).unwrap();
        }
        assert_eq!(text.lines().count(), recs.len() + 1);
    }

    #[test]
    fn missing_values_are_empty_cells() {
        let r = SweepRecord {
            point: 3,
            ..Default::default()
        };
        assert_eq!(cell(&r, "mean_error"), "");
        assert_eq!(cell(&r, "point"), "3");
    }
}
