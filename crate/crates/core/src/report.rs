//! Per-experiment error tables.

use std::fmt::Write as _;

use crate::calibration::{evaluate, ExperimentError, ExperimentRecord};
use crate::error::Result;
use crate::odometry::WheelParams;

/// Errors of every experiment at one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub params: WheelParams,
    pub rows: Vec<ExperimentError>,
    pub mean_relative_error: f64,
}

pub fn error_report(params: &WheelParams, experiments: &[ExperimentRecord]) -> Result<ErrorReport> {
    let (rows, mean_relative_error) = evaluate(params, experiments)?;
    Ok(ErrorReport {
        params: *params,
        rows,
        mean_relative_error,
    })
}

/// Renders a fraction as a percentage with two decimals, rounding half up.
///
/// Values within 1e-9 of a half-cent tie are treated as ties so that binary
/// representation error does not round them down.
pub fn format_percent(fraction: f64) -> String {
    let hundredths = fraction * 10_000.0;
    let floor = hundredths.floor();
    let rounded = if hundredths - floor >= 0.5 - 1e-9 {
        floor + 1.0
    } else {
        floor
    };
    let cents = rounded as i64;
    let sign = if cents < 0 { "-" } else { "" };
    let cents = cents.abs();
    format!("{sign}{}.{:02}%", cents / 100, cents % 100)
}

/// Side-by-side table of ground truth against two parameter sets, e.g. the
/// hand-measured geometry and the calibrated one.
pub fn render_comparison(
    labels: (&str, &str),
    first: &ErrorReport,
    second: &ErrorReport,
    experiment_names: &[String],
) -> String {
    let mut rows: Vec<[String; 5]> = Vec::with_capacity(first.rows.len() + 1);
    rows.push([
        "experiment".into(),
        "kind".into(),
        "GT".into(),
        format!("{} (err)", labels.0),
        format!("{} (err)", labels.1),
    ]);
    for (i, (a, b)) in first.rows.iter().zip(&second.rows).enumerate() {
        rows.push([
            experiment_names.get(i).cloned().unwrap_or_else(|| format!("#{}", i + 1)),
            a.kind.to_string(),
            format!("{:.2} m", a.gt_value_m),
            format!("{:.2} m ({})", a.predicted_m, format_percent(a.relative_error)),
            format!("{:.2} m ({})", b.predicted_m, format_percent(b.relative_error)),
        ]);
    }
    rows.push([
        "mean".into(),
        String::new(),
        String::new(),
        format_percent(first.mean_relative_error),
        format_percent(second.mean_relative_error),
    ]);

    let mut widths = [0usize; 5];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        writeln!(out, "{}", line.join(" | ").trim_end()).unwrap();
        if i == 0 || i + 2 == rows.len() {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            writeln!(out, "{}", rule.join("-+-")).unwrap();
        }
    }
    out
}
