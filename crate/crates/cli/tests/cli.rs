use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wheelodo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wheelodo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value of `key=value` in a text summary line.
fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {summary:?}"))
        .parse()
        .unwrap()
}

const ONE_REV: &str = "timestamp_us,left_ticks,right_ticks\n0,0,0\n10000,1024,1024\n20000,2048,2048\n30000,3072,3072\n40000,4096,4096\n";

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&wheelodo(&[])), 1);
    assert_eq!(code(&wheelodo(&["integrate"])), 1);
    assert_eq!(code(&wheelodo(&["bogus"])), 1);
    assert_eq!(code(&wheelodo(&["--help"])), 0);
    assert_eq!(code(&wheelodo(&["--version"])), 0);
}

#[test]
fn simulate_straight_run() {
    let dir = TempDir::new().unwrap();
    let profile = write(dir.path(), "p.csv", "v,omega,duration_s\n1.0,0,10\n");
    let (ticks, truth) = (dir.path().join("t.csv"), dir.path().join("gt.csv"));
    let out = wheelodo(&[
        "simulate", s(&profile), "--wheel-base", "0.64", "--wheel-radius", "0.164",
        "--out-ticks", s(&ticks), "--out-truth", s(&truth),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let gt = fs::read_to_string(&truth).unwrap();
    let last: Vec<f64> = gt.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 10_000_000.0);
    assert!((last[1] - 10.0).abs() < 1e-9, "final x {}", last[1]);
    assert_eq!(fs::read_to_string(&ticks).unwrap().lines().count(), 1002);
    assert_eq!(field(&stdout(&out), "samples"), 1001.0);
}

#[test]
fn simulate_rejects_empty_profile_and_zero_rate() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let (ticks, truth) = (dir.path().join("t.csv"), dir.path().join("gt.csv"));
    let run = |profile: &Path, rate: &str| {
        wheelodo(&[
            "simulate", s(profile), "--rate-hz", rate, "--out-ticks", s(&ticks), "--out-truth", s(&truth),
        ])
    };
    let out = run(&empty, "100");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty.csv"), "{}", stderr(&out));

    let good = write(dir.path(), "p.csv", "v,omega,duration_s\n1.0,0,1\n");
    assert_eq!(code(&run(&good, "0")), 3);
    assert!(!ticks.exists());
}

#[test]
fn integrate_one_revolution() {
    let dir = TempDir::new().unwrap();
    let log = write(dir.path(), "rev.csv", ONE_REV);
    let traj = dir.path().join("traj.csv");
    let out = wheelodo(&["integrate", s(&log), "--wheel-radius", "0.164", "--out", s(&traj)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let length = field(&stdout(&out), "path_length_m");
    assert!((length - 1.0304423903774522).abs() < 1e-12, "{length}");
    assert_eq!(fs::read_to_string(&traj).unwrap().lines().count(), 6);

    let csv = wheelodo(&["--format", "csv", "integrate", s(&log), "--wheel-radius", "0.164", "--out", s(&traj)]);
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("samples,path_length_m,final_x,final_y,final_theta"));
    assert!(lines.next().unwrap().starts_with("5,1.030442390377452"));
}

#[test]
fn integrate_to_ugv_frame() {
    let dir = TempDir::new().unwrap();
    let log = write(dir.path(), "rev.csv", ONE_REV);
    let traj = dir.path().join("ugv.csv");
    let out = wheelodo(&["integrate", s(&log), "--out", s(&traj), "--to-ugv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("timestamp_us,x,y,z,theta"));
    assert_eq!(lines.next(), Some("0,0,-1.21,-0.59,0"));
}

#[test]
fn integrate_input_and_numeric_errors() {
    let dir = TempDir::new().unwrap();
    let traj = dir.path().join("traj.csv");
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&wheelodo(&["integrate", s(&missing), "--out", s(&traj)])), 2);

    let bad = write(dir.path(), "bad.csv", "timestamp_us,left_ticks,right_ticks\n0,0,x\n");
    assert_eq!(code(&wheelodo(&["integrate", s(&bad), "--out", s(&traj)])), 2);

    // one revolution in a single step exceeds the default 1 m bound
    let jump = write(dir.path(), "jump.csv", "timestamp_us,left_ticks,right_ticks\n0,0,0\n1,4096,4096\n");
    let out = wheelodo(&["integrate", s(&jump), "--wheel-radius", "0.164", "--out", s(&traj)]);
    assert_eq!(code(&out), 3);
    let out = wheelodo(&["integrate", s(&jump), "--wheel-radius", "0.164", "--max-step", "2", "--out", s(&traj)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    assert_eq!(code(&wheelodo(&["integrate", s(&jump), "--wheel-radius=-1", "--out", s(&traj)])), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let log = write(dir.path(), "rev.csv", ONE_REV);
    let traj = dir.path().join("traj.csv");
    let cfg = write(dir.path(), "c.toml", "wheel_radius = 0.328\n");
    let out = wheelodo(&["--config", s(&cfg), "integrate", s(&log), "--out", s(&traj), "--max-step", "5"]);
    assert!((field(&stdout(&out), "path_length_m") - 2.0 * 1.0304423903774522).abs() < 1e-12);
    let out = wheelodo(&["--config", s(&cfg), "integrate", s(&log), "--out", s(&traj), "--wheel-radius", "0.164"]);
    assert!((field(&stdout(&out), "path_length_m") - 1.0304423903774522).abs() < 1e-12);

    let broken = write(dir.path(), "broken.toml", "wheel_radius = \n");
    assert_eq!(code(&wheelodo(&["--config", s(&broken), "integrate", s(&log), "--out", s(&traj)])), 2);
}

fn simulate_into(dir: &Path, name: &str, v: f64, omega: f64, duration: f64) {
    let profile = write(dir, &format!("{name}.profile.csv"), &format!("v,omega,duration_s\n{v},{omega},{duration}\n"));
    let out = wheelodo(&[
        "simulate", s(&profile), "--wheel-base", "0.64", "--wheel-radius", "0.164",
        "--out-ticks", s(&dir.join(format!("{name}.csv"))),
        "--out-truth", s(&dir.join(format!("{name}.gt.csv"))),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn synthetic_manifest(dir: &Path) -> PathBuf {
    simulate_into(dir, "f1", 1.0, 0.0, 6.45);
    simulate_into(dir, "f2", 1.0, 0.0, 17.37);
    simulate_into(dir, "b1", -1.0, 0.0, 6.76);
    let omega = 0.5 / (2.63 / 2.0);
    simulate_into(dir, "c1", 0.5, omega, std::f64::consts::TAU / omega);
    write(
        dir,
        "manifest.csv",
        "kind,gt_value_m,log_path\nforward,6.45,f1.csv\nforward,17.37,f2.csv\nbackward,6.76,b1.csv\ncircle,2.63,c1.csv\n",
    )
}

#[test]
fn calibrate_recovers_synthetic_geometry_deterministically() {
    let dir = TempDir::new().unwrap();
    let manifest = synthetic_manifest(dir.path());
    let (report, grid) = (dir.path().join("report.csv"), dir.path().join("grid.csv"));
    let run = |threads: &str| {
        wheelodo(&[
            "calibrate", s(&manifest), "--n", "25", "--out", s(&report), "--dump-grid", s(&grid),
            "--threads", threads,
        ])
    };
    let out = run("1");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let optimum = text.lines().find(|l| l.starts_with("optimum")).unwrap();
    let (l, r) = (field(optimum, "L"), field(optimum, "R"));
    let (l_step, r_step) = (0.2 / 24.0, 0.02 / 24.0);
    assert!((l - 0.64).abs() <= l_step, "L {l}");
    assert!((r - 0.164).abs() <= r_step, "R {r}");
    assert!(text.contains("measured L=0.7 R=0.1575"));
    assert!(stderr(&out).is_empty(), "{}", stderr(&out));

    let report_text = fs::read_to_string(&report).unwrap();
    assert_eq!(report_text.lines().count(), 1 + 1 + 2 * 5);
    let manifest_row = report_text.lines().nth(1).unwrap();
    assert!(manifest_row.starts_with("manifest,"));
    assert_eq!(manifest_row.split(',').nth(4).unwrap().len(), 64);
    assert_eq!(fs::read_to_string(&grid).unwrap().lines().count(), 1 + 25 * 25);

    let first = (out.stdout.clone(), fs::read(&report).unwrap(), fs::read(&grid).unwrap());
    let again = run("3");
    assert_eq!(first, (again.stdout, fs::read(&report).unwrap(), fs::read(&grid).unwrap()));
}

#[test]
fn calibrate_straight_only_warns_but_succeeds() {
    let dir = TempDir::new().unwrap();
    simulate_into(dir.path(), "f1", 1.0, 0.0, 6.45);
    let manifest = write(dir.path(), "m.csv", "kind,gt_value_m,log_path\nforward,6.45,f1.csv\n");
    let report = dir.path().join("r.csv");
    let out = wheelodo(&["calibrate", s(&manifest), "--n", "10", "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("warning:"), "{}", stderr(&out));
    assert!(stderr(&out).contains("wheel base"));
}

#[test]
fn calibrate_error_codes() {
    let dir = TempDir::new().unwrap();
    simulate_into(dir.path(), "f1", 1.0, 0.0, 2.0);
    let manifest = write(dir.path(), "m.csv", "kind,gt_value_m,log_path\nforward,2,f1.csv\n");
    let report = dir.path().join("r.csv");
    let run = |m: &Path, extra: &[&str]| {
        let mut args = vec!["calibrate", s(m), "--out", s(&report)];
        args.extend_from_slice(extra);
        code(&wheelodo(&args))
    };
    assert_eq!(run(&manifest, &["--n", "1"]), 3);
    assert_eq!(run(&manifest, &["--l-min", "0.9"]), 3);
    assert_eq!(run(&write(dir.path(), "empty.csv", ""), &[]), 3);
    assert_eq!(run(&write(dir.path(), "header.csv", "kind,gt_value_m,log_path\n"), &[]), 3);
    assert_eq!(run(&dir.path().join("missing.csv"), &[]), 2);
    let dangling = write(dir.path(), "d.csv", "kind,gt_value_m,log_path\nforward,2,nope.csv\n");
    assert_eq!(run(&dangling, &[]), 2);
    let bad_kind = write(dir.path(), "k.csv", "kind,gt_value_m,log_path\nsideways,2,f1.csv\n");
    assert_eq!(run(&bad_kind, &[]), 2);
}

fn quadrature_csv(states: &[(u64, u8, u8)]) -> String {
    let mut text = String::from("timestamp_us,a,b\n");
    for (t, a, b) in states {
        text.push_str(&format!("{t},{a},{b}\n"));
    }
    text
}

#[test]
fn decode_policies() {
    let dir = TempDir::new().unwrap();
    let left = write(dir.path(), "l.csv", &quadrature_csv(&[(0, 0, 0), (1, 0, 1), (2, 1, 1), (3, 1, 0), (4, 0, 0)]));
    let right = write(dir.path(), "r.csv", &quadrature_csv(&[(0, 0, 0), (2, 1, 1), (4, 1, 0)]));
    let out_path = dir.path().join("ticks.csv");
    let run = |policy: &str| {
        wheelodo(&["decode", "--left", s(&left), "--right", s(&right), "--policy", policy, "--out", s(&out_path)])
    };
    let fail = run("fail");
    assert_eq!(code(&fail), 3);
    assert!(stderr(&fail).contains("right channel"), "{}", stderr(&fail));
    assert!(stderr(&fail).contains("index 1") || stderr(&fail).contains("sample 1"), "{}", stderr(&fail));

    let skip = run("skip");
    assert_eq!(code(&skip), 0, "{}", stderr(&skip));
    assert!(stderr(&skip).contains("right_illegal=1"), "{}", stderr(&skip));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().last(), Some("4,4,1"));

    let forward = write(dir.path(), "f.csv", &quadrature_csv(&[(0, 0, 0), (2, 0, 1), (4, 1, 1)]));
    let out = wheelodo(&["decode", "--left", s(&left), "--right", s(&forward), "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&out_path).unwrap(),
        "timestamp_us,left_ticks,right_ticks\n0,0,0\n1,1,0\n2,2,1\n3,3,1\n4,4,2\n"
    );
}

#[test]
fn simulate_quadrature_decodes_back_to_ticks() {
    let dir = TempDir::new().unwrap();
    let profile = write(dir.path(), "p.csv", "v,omega,duration_s\n0.5,0.4,2\n-0.3,0,1\n");
    let ticks = dir.path().join("t.csv");
    let prefix = dir.path().join("ab");
    let out = wheelodo(&[
        "simulate", s(&profile), "--out-ticks", s(&ticks), "--out-truth", s(&dir.path().join("gt.csv")),
        "--emit-quadrature", s(&prefix),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let decoded = dir.path().join("decoded.csv");
    let out = wheelodo(&[
        "decode", "--left", s(&dir.path().join("ab_left.csv")), "--right", s(&dir.path().join("ab_right.csv")),
        "--out", s(&decoded),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let original = fs::read_to_string(&ticks).unwrap();
    let recovered = fs::read_to_string(&decoded).unwrap();
    let recovered_rows: std::collections::HashSet<&str> = recovered.lines().collect();
    for row in original.lines() {
        assert!(recovered_rows.contains(row), "missing {row}");
    }
}

#[test]
fn parse_clean_and_corrupted_streams() {
    let dir = TempDir::new().unwrap();
    let profile = write(dir.path(), "p.csv", "v,omega,duration_s\n0.8,0.2,3\n");
    let (csv_ticks, bin_ticks) = (dir.path().join("t.csv"), dir.path().join("t.ticks"));
    for out_ticks in [&csv_ticks, &bin_ticks] {
        let out = wheelodo(&[
            "simulate", s(&profile), "--out-ticks", s(out_ticks), "--out-truth", s(&dir.path().join("gt.csv")),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let parsed = dir.path().join("parsed.csv");
    let out = wheelodo(&["parse", s(&bin_ticks), "--out", s(&parsed)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(&parsed).unwrap(), fs::read(&csv_ticks).unwrap());
    assert!(stderr(&out).contains("frames=301 bad_crc=0"), "{}", stderr(&out));

    // flip one bit in frame 10 and splice garbage after frame 20
    let mut bytes = fs::read(&bin_ticks).unwrap();
    bytes[10 * 21 + 7] ^= 0x10;
    let garbage = [0xAAu8, 0x55, 0x01, 0x13, 0x37, 0xAA];
    bytes.splice(21 * 21..21 * 21, garbage);
    let corrupted = dir.path().join("bad.ticks");
    fs::write(&corrupted, &bytes).unwrap();
    let out = wheelodo(&["parse", s(&corrupted), "--out", s(&parsed)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("frames=300 bad_crc="), "{}", stderr(&out));
    let original = fs::read_to_string(&csv_ticks).unwrap();
    let mut expected: Vec<&str> = original.lines().collect();
    expected.remove(1 + 10);
    assert_eq!(fs::read_to_string(&parsed).unwrap().lines().collect::<Vec<_>>(), expected);

    // a corrupted binary log still integrates
    let out = wheelodo(&["integrate", s(&corrupted), "--out", s(&dir.path().join("traj.csv"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("bad_crc="));

    assert_eq!(code(&wheelodo(&["parse", s(&dir.path().join("none.ticks")), "--out", s(&parsed)])), 2);
}
