//! Grid-search calibration of wheel base and wheel radius.
//!
//! Every (L, R) pair on a uniform grid is scored by the mean relative error
//! between predicted and ground-truth experiment values; the minimizer wins,
//! ties going to the smallest L and then the smallest R.
//!
//! Straight runs are scored by path length, which does not depend on L.
//! Only circle experiments constrain the wheel base.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::circle::circle_diameter;
use crate::error::{Error, Result};
use crate::odometry::{integrate_log, path_length, relative_error, Pose2D, WheelParams};
use crate::ticklog::TickLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Forward,
    Backward,
    Circle,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Forward => "forward",
            ExperimentKind::Backward => "backward",
            ExperimentKind::Circle => "circle",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(ExperimentKind::Forward),
            "backward" => Ok(ExperimentKind::Backward),
            "circle" => Ok(ExperimentKind::Circle),
            other => Err(Error::validation(format!(
                "unknown experiment kind {other:?} (expected forward, backward or circle)"
            ))),
        }
    }
}

/// One ground-truth measurement and the encoder log recorded during it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    /// Travelled distance for straight runs, diameter for circles (m).
    pub gt_value_m: f64,
    pub log: TickLog,
}

impl ExperimentRecord {
    pub fn new(kind: ExperimentKind, gt_value_m: f64, log: TickLog) -> Result<Self> {
        if !(gt_value_m.is_finite() && gt_value_m > 0.0) {
            return Err(Error::validation(format!(
                "ground truth must be positive, got {gt_value_m}"
            )));
        }
        Ok(Self {
            kind,
            gt_value_m,
            log,
        })
    }
}

/// Odometry estimate of the experiment's ground-truth quantity.
pub fn predict_experiment(params: &WheelParams, exp: &ExperimentRecord) -> Result<f64> {
    let traj = integrate_log(&exp.log, params, Pose2D::ORIGIN)?;
    match exp.kind {
        ExperimentKind::Forward | ExperimentKind::Backward => Ok(path_length(&traj)),
        ExperimentKind::Circle => circle_diameter(&traj),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub l_range: (f64, f64),
    pub r_range: (f64, f64),
    pub n_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            l_range: (0.6, 0.8),
            r_range: (0.15, 0.17),
            n_per_axis: 50,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("L", self.l_range), ("R", self.r_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
                return Err(Error::validation(format!(
                    "{name} range must satisfy 0 < min < max, got [{lo}, {hi}]"
                )));
            }
        }
        if self.n_per_axis < 2 {
            return Err(Error::validation(format!(
                "grid needs at least 2 values per axis, got {}",
                self.n_per_axis
            )));
        }
        Ok(())
    }

    /// `n` uniform values including both endpoints.
    fn axis(&self, (lo, hi): (f64, f64)) -> Vec<f64> {
        let step = (hi - lo) / (self.n_per_axis - 1) as f64;
        (0..self.n_per_axis)
            .map(|i| if i + 1 == self.n_per_axis { hi } else { lo + i as f64 * step })
            .collect()
    }

    pub fn l_values(&self) -> Vec<f64> {
        self.axis(self.l_range)
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.axis(self.r_range)
    }

    pub fn l_step(&self) -> f64 {
        (self.l_range.1 - self.l_range.0) / (self.n_per_axis - 1) as f64
    }

    pub fn r_step(&self) -> f64 {
        (self.r_range.1 - self.r_range.0) / (self.n_per_axis - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentError {
    pub kind: ExperimentKind,
    pub gt_value_m: f64,
    pub predicted_m: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub wheel_base_m: f64,
    pub wheel_radius_m: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationWarning {
    /// No circle experiment: the objective is flat along L.
    WheelBaseUnidentifiable,
}

impl fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationWarning::WheelBaseUnidentifiable => f.write_str(
                "no circle experiment: straight runs cannot constrain the wheel base; \
                 reported L is the smallest grid value",
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best_params: WheelParams,
    pub objective_value: f64,
    pub per_experiment: Vec<ExperimentError>,
    /// Objective over the final grid, L-major, when requested.
    pub full_grid: Option<Vec<GridCell>>,
    /// Grid the optimum was taken from (the refined grid if refinement ran).
    pub grid: GridSpec,
    pub warnings: Vec<CalibrationWarning>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub keep_surface: bool,
    /// Run a second pass over one step either side of the first optimum.
    pub refine: bool,
}

/// Per-experiment errors and their mean at fixed parameters.
pub fn evaluate(params: &WheelParams, experiments: &[ExperimentRecord]) -> Result<(Vec<ExperimentError>, f64)> {
    let rows = experiments
        .iter()
        .map(|exp| {
            let predicted = predict_experiment(params, exp)?;
            Ok(ExperimentError {
                kind: exp.kind,
                gt_value_m: exp.gt_value_m,
                predicted_m: predicted,
                relative_error: relative_error(predicted, exp.gt_value_m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = mean_error(rows.iter().map(|r| r.relative_error));
    Ok((rows, objective))
}

/// Mean taken over the sorted values so the result is bitwise independent of
/// experiment order.
fn mean_error(errors: impl Iterator<Item = f64>) -> f64 {
    let mut errors: Vec<f64> = errors.collect();
    errors.sort_by(f64::total_cmp);
    errors.iter().sum::<f64>() / errors.len() as f64
}

fn objective(params: &WheelParams, experiments: &[ExperimentRecord]) -> Result<f64> {
    let errors = experiments
        .iter()
        .map(|exp| relative_error(predict_experiment(params, exp)?, exp.gt_value_m))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_error(errors.into_iter()))
}

pub fn grid_search(
    experiments: &[ExperimentRecord],
    grid: &GridSpec,
    counts_per_rev: u32,
) -> Result<CalibrationResult> {
    grid_search_with(experiments, grid, counts_per_rev, &SearchOptions::default())
}

pub fn grid_search_with(
    experiments: &[ExperimentRecord],
    grid: &GridSpec,
    counts_per_rev: u32,
    options: &SearchOptions,
) -> Result<CalibrationResult> {
    if experiments.is_empty() {
        return Err(Error::validation("calibration needs at least one experiment"));
    }
    grid.validate()?;
    if counts_per_rev == 0 {
        return Err(Error::validation("counts per revolution must be positive"));
    }
    let search = || -> Result<CalibrationResult> {
        let (mut best, mut cells) = search_pass(experiments, grid, counts_per_rev)?;
        let mut final_grid = *grid;
        if options.refine {
            let around = |v: f64, step: f64, (lo, hi): (f64, f64)| ((v - step).max(lo), (v + step).min(hi));
            final_grid = GridSpec {
                l_range: around(best.wheel_base_m, grid.l_step(), grid.l_range),
                r_range: around(best.wheel_radius_m, grid.r_step(), grid.r_range),
                n_per_axis: grid.n_per_axis,
            };
            (best, cells) = search_pass(experiments, &final_grid, counts_per_rev)?;
        }
        let best_params = WheelParams::new(best.wheel_base_m, best.wheel_radius_m, counts_per_rev)?;
        let (per_experiment, objective_value) = evaluate(&best_params, experiments)?;
        let mut warnings = Vec::new();
        if !experiments.iter().any(|e| e.kind == ExperimentKind::Circle) {
            warnings.push(CalibrationWarning::WheelBaseUnidentifiable);
        }
        Ok(CalibrationResult {
            best_params,
            objective_value,
            per_experiment,
            full_grid: options.keep_surface.then_some(cells),
            grid: final_grid,
            warnings,
        })
    };
    match options.threads {
        None => search(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?
            .install(search),
    }
}

/// Scores every cell in parallel, then reduces sequentially in grid order.
fn search_pass(
    experiments: &[ExperimentRecord],
    grid: &GridSpec,
    counts_per_rev: u32,
) -> Result<(GridCell, Vec<GridCell>)> {
    let ls = grid.l_values();
    let rs = grid.r_values();
    let pairs: Vec<(f64, f64)> = ls
        .iter()
        .flat_map(|&l| rs.iter().map(move |&r| (l, r)))
        .collect();
    let scored: Vec<Result<GridCell>> = pairs
        .par_iter()
        .map(|&(l, r)| {
            let params = WheelParams::new(l, r, counts_per_rev)?;
            Ok(GridCell {
                wheel_base_m: l,
                wheel_radius_m: r,
                objective: objective(&params, experiments)?,
            })
        })
        .collect();
    let cells = scored.into_iter().collect::<Result<Vec<GridCell>>>()?;

    // L-major order plus strict improvement gives the smallest-L, then
    // smallest-R tie-break. NaN never wins.
    let mut best: Option<GridCell> = None;
    for cell in &cells {
        if cell.objective.is_nan() {
            continue;
        }
        if best.is_none_or(|b| cell.objective < b.objective) {
            best = Some(*cell);
        }
    }
    let best = best.ok_or_else(|| Error::validation("objective is NaN on the whole grid"))?;
    Ok((best, cells))
}
