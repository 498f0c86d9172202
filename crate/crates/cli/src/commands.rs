//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wheelodo_core::calibration::{grid_search_with, GridCell, SearchOptions};
use wheelodo_core::export::{write_ground_truth_csv, write_trajectory_3d_csv, write_trajectory_csv};
use wheelodo_core::manifest::{parse_manifest, read_log};
use wheelodo_core::odometry::{integrate_log_bounded, DEFAULT_COUNTS_PER_REV, DEFAULT_MAX_STEP_M};
use wheelodo_core::protocol::{frames_to_ticklog, read_ticks_file, write_ticks_file};
use wheelodo_core::quadrature::{merge_wheel_counts, read_quadrature_csv, write_quadrature_csv};
use wheelodo_core::report::render_comparison;
use wheelodo_core::simulator::read_profile_csv;
use wheelodo_core::ticklog::write_ticklog_csv;
use wheelodo_core::{
    circle_diameter, decode_stream, emit_quadrature, error_report, path_length, simulate,
    transform_trajectory, Error, ErrorReport, ExperimentRecord, GridSpec, IllegalPolicy,
    ParseDiagnostics, Pose2D, TickLog, WheelParams,
};

use crate::config::FileConfig;
use crate::{
    CalibrateArgs, Cli, Command, DecodeArgs, IntegrateArgs, OutputFormat, ParseArgs, PolicyArg,
    SimulateArgs, WheelArgs,
};

/// Message and process exit code of a failed run.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_input_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, &cfg, cli.format),
        Command::Integrate(args) => cmd_integrate(args, &cfg, cli.format),
        Command::Calibrate(args) => cmd_calibrate(args, &cfg, cli.format),
        Command::Decode(args) => cmd_decode(args),
        Command::Parse(args) => cmd_parse(args),
    }
}

fn wheel_params(flags: &WheelArgs, cfg: &FileConfig) -> Result<WheelParams, Error> {
    let defaults = WheelParams::measured();
    WheelParams::new(
        flags.wheel_base.or(cfg.wheel_base).unwrap_or(defaults.wheel_base_m),
        flags.wheel_radius.or(cfg.wheel_radius).unwrap_or(defaults.wheel_radius_m),
        flags.counts_per_rev.or(cfg.counts_per_rev).unwrap_or(DEFAULT_COUNTS_PER_REV),
    )
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "ticks")
}

fn write_log(log: &TickLog, path: &Path) -> Result<(), Error> {
    if is_binary(path) {
        write_ticks_file(log, path)
    } else {
        write_ticklog_csv(log, path)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// `key=value` pairs for text output, or a header and one row for CSV.
fn print_summary(format: OutputFormat, fields: &[(&str, String)]) {
    match format {
        OutputFormat::Text => {
            let pairs: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{}", pairs.join(" "));
        }
        OutputFormat::Csv => {
            let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            println!("{}\n{}", keys.join(","), values.join(","));
        }
    }
}

fn report_frame_diagnostics(path: &Path, frames: usize, diag: &ParseDiagnostics, dropped: usize) {
    eprintln!(
        "{}: frames={frames} bad_crc={} bad_version={} resyncs={} trailing_partial={} dropped_non_monotonic={dropped}",
        path.display(),
        diag.bad_crc,
        diag.bad_version,
        diag.resyncs,
        diag.trailing_partial,
    );
}

fn cmd_simulate(args: &SimulateArgs, cfg: &FileConfig, format: OutputFormat) -> CmdResult {
    let params = wheel_params(&args.wheel, cfg)?;
    let profile = read_profile_csv(&args.profile, args.rate_hz)?;
    let sim = simulate(&profile, &params, Pose2D::ORIGIN)?;
    if let Some(prefix) = &args.emit_quadrature {
        let (left, right) = emit_quadrature(&sim.ground_truth, &params, args.oversample)?;
        write_quadrature_csv(&left, &suffixed(prefix, "_left.csv"))?;
        write_quadrature_csv(&right, &suffixed(prefix, "_right.csv"))?;
    }
    write_log(&sim.ticklog, &args.out_ticks)?;
    write_ground_truth_csv(&sim.ground_truth, &args.out_truth)?;
    let last = sim.ground_truth.trajectory.last();
    print_summary(
        format,
        &[
            ("samples", sim.ticklog.len().to_string()),
            ("final_x", last.pose.x.to_string()),
            ("final_y", last.pose.y.to_string()),
            ("final_theta", last.pose.theta.to_string()),
        ],
    );
    Ok(())
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_integrate(args: &IntegrateArgs, cfg: &FileConfig, format: OutputFormat) -> CmdResult {
    let params = wheel_params(&args.wheel, cfg)?;
    let max_step = args.max_step.or(cfg.max_step).unwrap_or(DEFAULT_MAX_STEP_M);
    let ugv = if args.to_ugv {
        Some(cfg.ugv_transform(args.l0, args.h0)?)
    } else {
        None
    };
    let (log, binary) = read_log(&args.log)?;
    if let Some((diag, dropped)) = binary {
        if !diag.is_clean() || dropped > 0 {
            report_frame_diagnostics(&args.log, log.len(), &diag, dropped);
        }
    }
    let traj = integrate_log_bounded(&log, &params, Pose2D::ORIGIN, max_step)?;
    match &ugv {
        Some(t) => write_trajectory_3d_csv(&transform_trajectory(&traj, t, 0.0), &args.out)?,
        None => write_trajectory_csv(&traj, &args.out)?,
    }
    let last = traj.last().pose;
    let mut fields = vec![
        ("samples", traj.len().to_string()),
        ("path_length_m", path_length(&traj).to_string()),
        ("final_x", last.x.to_string()),
        ("final_y", last.y.to_string()),
        ("final_theta", last.theta.to_string()),
    ];
    if args.circle {
        fields.push(("circle_diameter_m", circle_diameter(&traj)?.to_string()));
    }
    print_summary(format, &fields);
    Ok(())
}

struct LoadedExperiment {
    label: String,
    sha256: String,
    record: ExperimentRecord,
}

fn cmd_calibrate(args: &CalibrateArgs, cfg: &FileConfig, format: OutputFormat) -> CmdResult {
    let defaults = GridSpec::default();
    let grid = GridSpec {
        l_range: (
            args.l_min.or(cfg.l_min).unwrap_or(defaults.l_range.0),
            args.l_max.or(cfg.l_max).unwrap_or(defaults.l_range.1),
        ),
        r_range: (
            args.r_min.or(cfg.r_min).unwrap_or(defaults.r_range.0),
            args.r_max.or(cfg.r_max).unwrap_or(defaults.r_range.1),
        ),
        n_per_axis: args.n.or(cfg.n).unwrap_or(defaults.n_per_axis),
    };
    grid.validate()?;
    let cpr = args.counts_per_rev.or(cfg.counts_per_rev).unwrap_or(DEFAULT_COUNTS_PER_REV);
    let measured_defaults = WheelParams::measured();
    let measured = WheelParams::new(
        args.measured_wheel_base
            .or(cfg.measured_wheel_base)
            .unwrap_or(measured_defaults.wheel_base_m),
        args.measured_wheel_radius
            .or(cfg.measured_wheel_radius)
            .unwrap_or(measured_defaults.wheel_radius_m),
        cpr,
    )?;

    let manifest_bytes = fs::read(&args.manifest).map_err(io_error(&args.manifest))?;
    if manifest_bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::Validation(format!("{}: manifest is empty", args.manifest.display())).into());
    }
    let base = args.manifest.parent().unwrap_or(Path::new(""));
    let entries = parse_manifest(manifest_bytes.as_slice(), &args.manifest, base)?;
    if entries.is_empty() {
        return Err(Error::Validation(format!(
            "{}: manifest lists no experiments",
            args.manifest.display()
        ))
        .into());
    }

    let mut loaded = Vec::with_capacity(entries.len());
    for entry in &entries {
        let bytes = fs::read(&entry.log_path).map_err(io_error(&entry.log_path))?;
        let (log, binary) = read_log(&entry.log_path)?;
        if let Some((diag, dropped)) = binary {
            if !diag.is_clean() || dropped > 0 {
                report_frame_diagnostics(&entry.log_path, log.len(), &diag, dropped);
            }
        }
        let label = entry
            .log_path
            .strip_prefix(base)
            .unwrap_or(&entry.log_path)
            .display()
            .to_string();
        loaded.push(LoadedExperiment {
            label,
            sha256: sha256_hex(&bytes),
            record: ExperimentRecord::new(entry.kind, entry.gt_value_m, log)?,
        });
    }
    let experiments: Vec<ExperimentRecord> = loaded.iter().map(|e| e.record.clone()).collect();

    let options = SearchOptions {
        threads: args.threads,
        keep_surface: args.dump_grid.is_some(),
        refine: args.refine,
    };
    let result = grid_search_with(&experiments, &grid, cpr, &options)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    if let (Some(path), Some(cells)) = (&args.dump_grid, &result.full_grid) {
        write_grid(cells, path)?;
    }

    let before = error_report(&measured, &experiments)?;
    let after = error_report(&result.best_params, &experiments)?;
    let manifest_hash = sha256_hex(&manifest_bytes);
    let mut report = Vec::new();
    write_report(&mut report, &args.manifest, &manifest_hash, &loaded, &before, &after)
        .map_err(io_error(&args.out))?;
    fs::write(&args.out, &report).map_err(io_error(&args.out))?;

    match format {
        OutputFormat::Csv => {
            std::io::stdout()
                .write_all(&report)
                .map_err(io_error(Path::new("<stdout>")))?;
        }
        OutputFormat::Text => {
            let labels: Vec<String> = loaded.iter().map(|e| e.label.clone()).collect();
            let best = &result.best_params;
            println!("manifest {} sha256 {manifest_hash}", args.manifest.display());
            println!(
                "grid L [{}, {}] R [{}, {}] n {}{}",
                grid.l_range.0,
                grid.l_range.1,
                grid.r_range.0,
                grid.r_range.1,
                grid.n_per_axis,
                if args.refine { " (refined)" } else { "" },
            );
            println!(
                "optimum L={} m R={} m objective={}",
                best.wheel_base_m, best.wheel_radius_m, result.objective_value
            );
            println!();
            print!(
                "{}",
                render_comparison(
                    (
                        &format!("measured L={} R={}", measured.wheel_base_m, measured.wheel_radius_m),
                        &format!("optimized L={:.4} R={:.5}", best.wheel_base_m, best.wheel_radius_m),
                    ),
                    &before,
                    &after,
                    &labels,
                )
            );
        }
    }
    Ok(())
}

/// Long-format report: one row per (parameter set, experiment) plus a mean
/// row per parameter set and a manifest row carrying its hash.
fn write_report<W: Write>(
    writer: W,
    manifest: &Path,
    manifest_hash: &str,
    experiments: &[LoadedExperiment],
    measured: &ErrorReport,
    optimized: &ErrorReport,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "record",
        "kind",
        "gt_value_m",
        "log_path",
        "sha256",
        "wheel_base_m",
        "wheel_radius_m",
        "predicted_m",
        "relative_error",
    ])?;
    let manifest_name = manifest.display().to_string();
    w.write_record(["manifest", "", "", &manifest_name, manifest_hash, "", "", "", ""])?;
    for (name, report) in [("measured", measured), ("optimized", optimized)] {
        let l = report.params.wheel_base_m.to_string();
        let r = report.params.wheel_radius_m.to_string();
        for (exp, row) in experiments.iter().zip(&report.rows) {
            w.write_record([
                name,
                row.kind.as_str(),
                &row.gt_value_m.to_string(),
                &exp.label,
                &exp.sha256,
                &l,
                &r,
                &row.predicted_m.to_string(),
                &row.relative_error.to_string(),
            ])?;
        }
        w.write_record([
            &format!("{name}_mean"),
            "",
            "",
            "",
            "",
            &l,
            &r,
            "",
            &report.mean_relative_error.to_string(),
        ])?;
    }
    w.flush()
}

fn write_grid(cells: &[GridCell], path: &Path) -> Result<(), Error> {
    let mut buf = Vec::new();
    write_grid_rows(cells, &mut buf).map_err(io_error(path))?;
    fs::write(path, buf).map_err(io_error(path))
}

fn write_grid_rows<W: Write>(cells: &[GridCell], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wheel_base_m", "wheel_radius_m", "objective"])?;
    for c in cells {
        w.write_record([
            c.wheel_base_m.to_string(),
            c.wheel_radius_m.to_string(),
            c.objective.to_string(),
        ])?;
    }
    w.flush()
}

fn cmd_decode(args: &DecodeArgs) -> CmdResult {
    let policy = match args.policy {
        PolicyArg::Fail => IllegalPolicy::Fail,
        PolicyArg::Skip => IllegalPolicy::SkipAndCount,
    };
    let decode = |side: &str, path: &Path| -> Result<_, Failure> {
        let stream = read_quadrature_csv(path)?;
        decode_stream(&stream, policy).map_err(|e| {
            let failure = Failure::from(e);
            Failure {
                message: format!("{side} channel ({}): {}", path.display(), failure.message),
                ..failure
            }
        })
    };
    let left = decode("left", &args.left)?;
    let right = decode("right", &args.right)?;
    let log = merge_wheel_counts(&left.counts, &right.counts);
    write_log(&log, &args.out)?;
    eprintln!(
        "samples={} left_illegal={} right_illegal={} left_final={} right_final={}",
        log.len(),
        left.illegal_transitions,
        right.illegal_transitions,
        left.final_count(),
        right.final_count(),
    );
    Ok(())
}

fn cmd_parse(args: &ParseArgs) -> CmdResult {
    let (frames, diag) = read_ticks_file(&args.input)?;
    let (log, dropped) = if frames.is_empty() {
        (TickLog::default(), 0)
    } else {
        frames_to_ticklog(&frames)?
    };
    write_ticklog_csv(&log, &args.out)?;
    report_frame_diagnostics(&args.input, frames.len(), &diag, dropped);
    Ok(())
}
