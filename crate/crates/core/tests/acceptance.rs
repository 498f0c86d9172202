//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wheelodo_core::calibration::{grid_search_with, SearchOptions};
use wheelodo_core::protocol::FRAME_LEN;
use wheelodo_core::{
    circle_diameter, decode_stream, decode_transition, encode_frame, format_percent,
    integrate_log, parse_stream, relative_error, simulate, CalibrationResult, CommandProfile,
    EncoderFrame, ExperimentKind, ExperimentRecord, GridSpec, IllegalPolicy, Pose2D, QuadSample,
    QuadState, RigidTransform3D, VehicleToUgvOffsets, WheelParams,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn truth_params() -> WheelParams {
    WheelParams::new(0.64, 0.164, 4096).unwrap()
}

/// Two-decimal half-up rendering of five reference error ratios.
fn ac1_error_arithmetic() -> Outcome {
    const CASES: [(f64, f64, &str); 5] = [
        (6.68, 6.45, "3.57%"),
        (18.07, 17.37, "4.03%"),
        (10.93, 10.62, "2.92%"),
        (6.93, 6.76, "2.51%"),
        (3.27, 2.63, "24.33%"),
    ];
    let mut rendered = Vec::new();
    for (measured, gt, expected) in CASES {
        let got = format_percent(relative_error(measured, gt).map_err(|e| e.to_string())?);
        ensure(got == expected, || format!("({measured}, {gt}) -> {got}, expected {expected}"))?;
        rendered.push(got);
    }
    Ok(rendered.join(" "))
}

fn ac2_round_trip() -> Outcome {
    let start = Instant::now();
    let p = truth_params();
    let sim = simulate(&CommandProfile::straight(10.0, 1.0, 100.0), &p, Pose2D::ORIGIN)
        .map_err(|e| e.to_string())?;
    let traj = integrate_log(&sim.ticklog, &p, Pose2D::ORIGIN).map_err(|e| e.to_string())?;
    let truth = sim.ground_truth.trajectory.last().pose;
    let est = traj.last().pose;
    let pos_err = (est.x - truth.x).hypot(est.y - truth.y);
    let head_err = (est.theta - truth.theta).abs();
    let pos_tol = 2.0 * p.tick_quantum_m();
    let head_tol = pos_tol / p.wheel_base_m;
    ensure(pos_err <= pos_tol, || format!("position error {pos_err:e} > {pos_tol:e}"))?;
    ensure(head_err <= head_tol, || format!("heading error {head_err:e} > {head_tol:e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("position error {pos_err:.3e} m (tol {pos_tol:.3e}), heading error {head_err:.3e} rad"))
}

fn synthetic_experiment(kind: ExperimentKind, gt: f64, p: &WheelParams) -> ExperimentRecord {
    let profile = match kind {
        ExperimentKind::Forward => CommandProfile::straight(gt, 1.0, 100.0),
        ExperimentKind::Backward => CommandProfile::straight(-gt, 1.0, 100.0),
        ExperimentKind::Circle => CommandProfile::circle(gt, 0.5, 100.0),
    };
    let log = simulate(&profile, p, Pose2D::ORIGIN).unwrap().ticklog;
    ExperimentRecord::new(kind, gt, log).unwrap()
}

fn five_experiments() -> Vec<ExperimentRecord> {
    let p = truth_params();
    [
        (ExperimentKind::Forward, 6.45),
        (ExperimentKind::Forward, 17.37),
        (ExperimentKind::Forward, 10.62),
        (ExperimentKind::Backward, 6.76),
        (ExperimentKind::Circle, 2.63),
    ]
    .into_iter()
    .map(|(kind, gt)| synthetic_experiment(kind, gt, &p))
    .collect()
}

fn ac3_calibration_recovery() -> Outcome {
    let experiments = five_experiments();
    let start = Instant::now();
    let opts = SearchOptions { threads: Some(1), ..SearchOptions::default() };
    let res = grid_search_with(&experiments, &GridSpec::default(), 4096, &opts)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (l, r) = (res.best_params.wheel_base_m, res.best_params.wheel_radius_m);
    ensure((l - 0.64).abs() <= 0.00409, || format!("L = {l}"))?;
    ensure((r - 0.164).abs() <= 0.000409, || format!("R = {r}"))?;
    let worst = res
        .per_experiment
        .iter()
        .map(|e| e.relative_error)
        .fold(0.0, f64::max);
    ensure(worst < 0.01, || format!("worst per-experiment error {}", format_percent(worst)))?;
    within_budget(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "L = {l:.5}, R = {r:.6}, worst error {}, {elapsed:.2?} single-threaded",
        format_percent(worst)
    ))
}

fn ac4_quadrature() -> Outcome {
    let stream: Vec<QuadSample> = (0..=4096)
        .map(|k| QuadSample::new(k as u64, QuadState::for_count(k)))
        .collect();
    let decoded = decode_stream(&stream, IllegalPolicy::Fail).map_err(|e| e.to_string())?;
    ensure(decoded.final_count() == 4096, || format!("decoded {}", decoded.final_count()))?;

    let states = [false, true]
        .into_iter()
        .flat_map(|a| [false, true].map(|b| QuadState::new(a, b)));
    let (mut steps, mut zeros, mut errors) = (0, 0, 0);
    for from in states.clone() {
        for to in states.clone() {
            match decode_transition(from, to) {
                Ok(0) => zeros += 1,
                Ok(1 | -1) => steps += 1,
                Ok(other) => return Err(format!("{from}->{to} gave {other}")),
                Err(_) => errors += 1,
            }
        }
    }
    ensure((steps, zeros, errors) == (8, 4, 4), || {
        format!("partition {steps}/{zeros}/{errors}")
    })?;
    Ok("1024 periods -> 4096 counts; table 8 step / 4 zero / 4 illegal".into())
}

fn flip_bits(rng: &mut ChaCha8Rng, frame: &mut [u8; FRAME_LEN]) {
    let mut chosen = Vec::new();
    while chosen.len() < rng.gen_range(1..=3) {
        let bit = rng.gen_range(0..FRAME_LEN * 8);
        if !chosen.contains(&bit) {
            chosen.push(bit);
        }
    }
    for bit in chosen {
        frame[bit / 8] ^= 1 << (bit % 8);
    }
}

fn ac5_protocol_robustness() -> Outcome {
    const TRIALS: usize = 10_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0D0_2024);
    let mut corrupted_total = 0usize;
    for trial in 0..TRIALS {
        let n = rng.gen_range(2..40);
        let mut bytes = Vec::new();
        let mut intact = Vec::new();
        let mut t = rng.gen_range(0..1_000_000u64);
        for _ in 0..n {
            t += rng.gen_range(1..20_000);
            let frame = EncoderFrame::new(t, rng.gen(), rng.gen());
            let mut raw = encode_frame(&frame);
            if rng.gen_bool(0.3) {
                flip_bits(&mut rng, &mut raw);
                corrupted_total += 1;
            } else {
                intact.push(frame);
            }
            bytes.extend_from_slice(&raw);
            if rng.gen_bool(0.2) {
                let gap = rng.gen_range(1..64);
                bytes.extend((0..gap).map(|_| rng.gen::<u8>()));
            }
        }
        let (frames, _) = parse_stream(&bytes);
        ensure(frames == intact, || {
            format!("trial {trial}: recovered {} of {} intact frames", frames.len(), intact.len())
        })?;
    }

    let frame = encode_frame(&EncoderFrame::new(123_456_789, -42, 1 << 20));
    let mut detected = 0;
    for bit in 16..FRAME_LEN * 8 {
        let mut raw = frame;
        raw[bit / 8] ^= 1 << (bit % 8);
        let (frames, diag) = parse_stream(&raw);
        if frames.is_empty() && diag.bad_crc == 1 {
            detected += 1;
        }
    }
    ensure(detected == 152, || format!("{detected}/152 single-bit flips detected"))?;
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "{TRIALS} trials ({corrupted_total} corrupted frames), 152/152 flips detected, {elapsed:.2?}"
    ))
}

fn ac6_frame_transform() -> Outcome {
    let t = RigidTransform3D::vehicle_to_ugv(VehicleToUgvOffsets::default());
    let origin = t.apply(&Vector3::zeros());
    ensure(origin == Vector3::new(0.0, -1.21, -0.59), || format!("origin -> {origin:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut point = || Vector3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
    let mut worst_inverse = 0.0f64;
    let mut worst_distance = 0.0f64;
    for _ in 0..1000 {
        let general = RigidTransform3D::rotation_z(point().x).compose(&RigidTransform3D::from_translation(point()));
        for tr in [&t, &general] {
            let (a, b) = (point(), point());
            worst_inverse = worst_inverse.max((tr.invert().apply(&tr.apply(&a)) - a).norm());
            let d = (a - b).norm();
            worst_distance = worst_distance.max(((tr.apply(&a) - tr.apply(&b)).norm() - d).abs());
        }
    }
    // Absolute 1e-12 on coordinates of magnitude up to ~100 m.
    ensure(worst_inverse <= 1e-12, || format!("invert∘apply residual {worst_inverse:e}"))?;
    ensure(worst_distance <= 1e-12, || format!("distance residual {worst_distance:e}"))?;
    Ok(format!("inverse residual {worst_inverse:.1e}, distance residual {worst_distance:.1e}"))
}

fn ac7_circle_metric() -> Outcome {
    let p = truth_params();
    let sim = simulate(&CommandProfile::circle(2.63, 0.5, 100.0), &p, Pose2D::ORIGIN)
        .map_err(|e| e.to_string())?;
    let traj = integrate_log(&sim.ticklog, &p, Pose2D::ORIGIN).map_err(|e| e.to_string())?;
    ensure(traj.len() >= 100, || format!("{} samples", traj.len()))?;
    let d = circle_diameter(&traj).map_err(|e| e.to_string())?;
    let err = relative_error(d, 2.63).map_err(|e| e.to_string())?;
    ensure(err <= 0.005, || format!("diameter {d}, error {}", format_percent(err)))?;
    Ok(format!("{} samples, diameter {d:.5} m, error {err:.2e}", traj.len()))
}

fn same_bits(a: &CalibrationResult, b: &CalibrationResult) -> bool {
    let cells = |r: &CalibrationResult| -> Vec<(u64, u64, u64)> {
        r.full_grid
            .iter()
            .flatten()
            .map(|c| (c.wheel_base_m.to_bits(), c.wheel_radius_m.to_bits(), c.objective.to_bits()))
            .collect()
    };
    let rows = |r: &CalibrationResult| -> Vec<(u64, u64)> {
        r.per_experiment
            .iter()
            .map(|e| (e.predicted_m.to_bits(), e.relative_error.to_bits()))
            .collect()
    };
    a == b
        && a.objective_value.to_bits() == b.objective_value.to_bits()
        && cells(a) == cells(b)
        && rows(a) == rows(b)
}

fn ac8_determinism() -> Outcome {
    let experiments = five_experiments();
    let grid = GridSpec { n_per_axis: 20, ..GridSpec::default() };
    let many = std::thread::available_parallelism().map_or(4, |n| n.get()).max(3);
    let run = |threads: usize| {
        let opts = SearchOptions { threads: Some(threads), keep_surface: true, refine: true };
        grid_search_with(&experiments, &grid, 4096, &opts).map_err(|e| e.to_string())
    };
    let one = run(1)?;
    for threads in [2, many] {
        let other = run(threads)?;
        ensure(same_bits(&one, &other), || format!("{threads} threads differ from 1"))?;
    }
    Ok(format!("1, 2 and {many} threads bit-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 error arithmetic", ac1_error_arithmetic),
        ("AC2 simulate/integrate round trip", ac2_round_trip),
        ("AC3 calibration recovery", ac3_calibration_recovery),
        ("AC4 quadrature exactness", ac4_quadrature),
        ("AC5 protocol robustness", ac5_protocol_robustness),
        ("AC6 frame transform", ac6_frame_transform),
        ("AC7 circle metric", ac7_circle_metric),
        ("AC8 determinism", ac8_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
