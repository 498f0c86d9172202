//! Ideal differential-drive simulator used as a ground-truth oracle.
//!
//! Commands are converted to wheel travel per sample with
//! `d_l = (v - omega*L/2) * dt`, `d_r = (v + omega*L/2) * dt` and integrated
//! with the same Euler step as [`crate::odometry`], so integrating the
//! emitted ticks differs from ground truth only by tick quantization.

use std::f64::consts::TAU;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::odometry::{step_unchecked, Pose2D, Trajectory, WheelDelta, WheelParams, DEFAULT_MAX_STEP_M};
use crate::quadrature::{QuadSample, QuadState};
use crate::ticklog::{read_strict_csv, TickLog, TickSample};

pub const PROFILE_HEADER: [&str; 3] = ["v", "omega", "duration_s"];

/// Constant-velocity command held for `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Linear velocity (m/s).
    pub v: f64,
    /// Angular velocity (rad/s).
    pub omega: f64,
    pub duration_s: f64,
}

impl Segment {
    pub fn new(v: f64, omega: f64, duration_s: f64) -> Self {
        Self { v, omega, duration_s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandProfile {
    pub segments: Vec<Segment>,
    pub sample_rate_hz: f64,
}

impl CommandProfile {
    pub fn new(segments: Vec<Segment>, sample_rate_hz: f64) -> Self {
        Self {
            segments,
            sample_rate_hz,
        }
    }

    /// Straight run of `distance_m` (negative drives backward) at `speed` m/s.
    pub fn straight(distance_m: f64, speed: f64, sample_rate_hz: f64) -> Self {
        let v = speed.abs() * distance_m.signum();
        Self::new(
            vec![Segment::new(v, 0.0, distance_m.abs() / speed.abs())],
            sample_rate_hz,
        )
    }

    /// One full counter-clockwise turn on a circle of `diameter_m`.
    pub fn circle(diameter_m: f64, speed: f64, sample_rate_hz: f64) -> Self {
        let radius = diameter_m / 2.0;
        let omega = speed / radius;
        Self::new(
            vec![Segment::new(speed, omega, TAU / omega)],
            sample_rate_hz,
        )
    }

    fn steps_in(&self, seg: &Segment) -> usize {
        (seg.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Checks the profile against `params` and a per-step travel bound.
    pub fn validate(&self, params: &WheelParams, max_step_m: f64) -> Result<()> {
        params.validate()?;
        let rate = self.sample_rate_hz;
        if !(rate.is_finite() && rate > 0.0 && rate <= 1e6) {
            return Err(Error::validation(format!(
                "sample rate must be in (0, 1e6] Hz, got {rate}"
            )));
        }
        if self.segments.is_empty() {
            return Err(Error::validation("command profile has no segments"));
        }
        let dt = 1.0 / rate;
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration_s.is_finite() && seg.duration_s > 0.0) {
                return Err(Error::validation(format!(
                    "segment {i}: duration must be positive, got {}",
                    seg.duration_s
                )));
            }
            if !(seg.v.is_finite() && seg.omega.is_finite()) {
                return Err(Error::validation(format!("segment {i}: non-finite command")));
            }
            if self.steps_in(seg) == 0 {
                return Err(Error::validation(format!(
                    "segment {i}: duration {} s is shorter than one sample",
                    seg.duration_s
                )));
            }
            let d = wheel_delta(seg, params, dt);
            if d.d_left_m.abs() > max_step_m || d.d_right_m.abs() > max_step_m {
                return Err(Error::StepTooLarge {
                    step: i,
                    d_left_m: d.d_left_m,
                    d_right_m: d.d_right_m,
                    bound_m: max_step_m,
                });
            }
        }
        Ok(())
    }
}

fn wheel_delta(seg: &Segment, params: &WheelParams, dt: f64) -> WheelDelta {
    let spin = seg.omega * params.wheel_base_m / 2.0;
    WheelDelta::new((seg.v - spin) * dt, (seg.v + spin) * dt)
}

/// Exact pre-quantization state at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub trajectory: Trajectory,
    /// Cumulative left wheel angle per sample (rad).
    pub left_angle_rad: Vec<f64>,
    /// Cumulative right wheel angle per sample (rad).
    pub right_angle_rad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub ground_truth: GroundTruth,
    pub ticklog: TickLog,
}

/// Cumulative counter reading for a wheel angle; floor keeps the residual.
/// Angles within floating rounding of a count edge read as that edge.
pub fn angle_to_ticks(angle_rad: f64, counts_per_rev: u32) -> i64 {
    let counts = angle_rad * counts_per_rev as f64 / TAU;
    let nearest = counts.round();
    if (counts - nearest).abs() <= EDGE_SNAP * nearest.abs().max(1.0) {
        nearest as i64
    } else {
        counts.floor() as i64
    }
}

/// Relative tolerance for snapping a counter reading onto a count edge.
const EDGE_SNAP: f64 = 1e-9;

/// Wheel angular rate (rad/s) for a wheel surface speed.
fn wheel_rate(wheel_speed: f64, params: &WheelParams) -> f64 {
    wheel_speed / params.wheel_radius_m
}

fn sample_time_us(k: usize, rate_hz: f64) -> u64 {
    (k as f64 * 1e6 / rate_hz).round() as u64
}

pub fn simulate(profile: &CommandProfile, params: &WheelParams, initial: Pose2D) -> Result<Simulation> {
    simulate_with_jitter(profile, params, initial, |_| (0, 0))
}

/// Like [`simulate`], with `jitter(step)` returning integer (left, right)
/// counts added to the counters after each step. Jitter accumulates in the
/// counters; ground truth is unaffected.
pub fn simulate_with_jitter<F>(
    profile: &CommandProfile,
    params: &WheelParams,
    initial: Pose2D,
    mut jitter: F,
) -> Result<Simulation>
where
    F: FnMut(usize) -> (i64, i64),
{
    profile.validate(params, DEFAULT_MAX_STEP_M)?;
    let rate = profile.sample_rate_hz;
    let dt = 1.0 / rate;
    let cpr = params.counts_per_rev;

    let total: usize = profile.segments.iter().map(|s| profile.steps_in(s)).sum();
    let mut trajectory = Trajectory::new(0, initial);
    let mut left_angle = Vec::with_capacity(total + 1);
    let mut right_angle = Vec::with_capacity(total + 1);
    let mut ticks = Vec::with_capacity(total + 1);
    left_angle.push(0.0);
    right_angle.push(0.0);
    ticks.push(TickSample::new(0, 0, 0));

    let (mut phi_l, mut phi_r) = (0.0f64, 0.0f64);
    let (mut off_l, mut off_r) = (0i64, 0i64);
    let mut pose = initial;
    let mut k = 0usize;
    for seg in &profile.segments {
        let delta = wheel_delta(seg, params, dt);
        // closed form within a segment keeps angle rounding from drifting
        let (start_l, start_r) = (phi_l, phi_r);
        let rate_l = wheel_rate(seg.v - seg.omega * params.wheel_base_m / 2.0, params);
        let rate_r = wheel_rate(seg.v + seg.omega * params.wheel_base_m / 2.0, params);
        for j in 1..=profile.steps_in(seg) {
            k += 1;
            pose = step_unchecked(pose, delta, params);
            let t = sample_time_us(k, rate);
            trajectory.push(t, pose, delta.mean_travel_m())?;
            let elapsed = j as f64 / rate;
            phi_l = start_l + rate_l * elapsed;
            phi_r = start_r + rate_r * elapsed;
            left_angle.push(phi_l);
            right_angle.push(phi_r);
            let (jl, jr) = jitter(k);
            off_l += jl;
            off_r += jr;
            ticks.push(TickSample::new(
                t,
                angle_to_ticks(phi_l, cpr) + off_l,
                angle_to_ticks(phi_r, cpr) + off_r,
            ));
        }
    }

    Ok(Simulation {
        ground_truth: GroundTruth {
            trajectory,
            left_angle_rad: left_angle,
            right_angle_rad: right_angle,
        },
        ticklog: TickLog::new(ticks)?,
    })
}

/// Synthesizes A/B level streams (left, right) whose decoding reproduces the
/// ideal counter readings at every ground-truth sample.
///
/// Both streams share one timeline. Between two ground-truth samples the
/// interval is divided into `oversample_factor * max|count change|` equal
/// sub-steps, so every count is held for at least `oversample_factor`
/// samples. A factor below 4, or a sub-step shorter than 1 us, is refused.
pub fn emit_quadrature(
    ground_truth: &GroundTruth,
    params: &WheelParams,
    oversample_factor: u32,
) -> Result<(Vec<QuadSample>, Vec<QuadSample>)> {
    if oversample_factor < 4 {
        return Err(Error::Aliasing(format!(
            "oversample factor {oversample_factor} is below 4"
        )));
    }
    let cpr = params.counts_per_rev;
    let samples = ground_truth.trajectory.samples();
    let counts: Vec<(i64, i64)> = ground_truth
        .left_angle_rad
        .iter()
        .zip(&ground_truth.right_angle_rad)
        .map(|(&l, &r)| (angle_to_ticks(l, cpr), angle_to_ticks(r, cpr)))
        .collect();
    if counts.len() != samples.len() {
        return Err(Error::validation("ground truth angle and pose counts differ"));
    }

    let mut left = Vec::with_capacity(samples.len());
    let mut right = Vec::with_capacity(samples.len());
    let (c0l, c0r) = counts[0];
    let t0 = samples[0].timestamp_us;
    left.push(QuadSample::new(t0, QuadState::for_count(c0l)));
    right.push(QuadSample::new(t0, QuadState::for_count(c0r)));

    for k in 1..samples.len() {
        let (ta, tb) = (samples[k - 1].timestamp_us, samples[k].timestamp_us);
        let (al, ar) = counts[k - 1];
        let (bl, br) = counts[k];
        let (dl, dr) = (bl - al, br - ar);
        let widest = dl.unsigned_abs().max(dr.unsigned_abs());
        if widest == 0 {
            left.push(QuadSample::new(tb, QuadState::for_count(bl)));
            right.push(QuadSample::new(tb, QuadState::for_count(br)));
            continue;
        }
        let sub_steps = widest * u64::from(oversample_factor);
        let span = tb - ta;
        if span < sub_steps {
            return Err(Error::Aliasing(format!(
                "interval {k}: {sub_steps} sub-samples do not fit in {span} us"
            )));
        }
        for j in 1..=sub_steps {
            let t = ta + span * j / sub_steps;
            let at = |start: i64, change: i64| {
                start + change.signum() * (change.unsigned_abs() * j / sub_steps) as i64
            };
            left.push(QuadSample::new(t, QuadState::for_count(at(al, dl))));
            right.push(QuadSample::new(t, QuadState::for_count(at(ar, dr))));
        }
    }
    Ok((left, right))
}

pub fn read_profile_csv(path: &Path, sample_rate_hz: f64) -> Result<CommandProfile> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_profile_csv(file, path, sample_rate_hz)
}

/// Parses `v,omega,duration_s` rows. An empty profile is a parse error.
pub fn parse_profile_csv<R: std::io::Read>(
    reader: R,
    path: &Path,
    sample_rate_hz: f64,
) -> Result<CommandProfile> {
    let rows = read_strict_csv(reader, path, &PROFILE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: "profile has no segments".into(),
        });
    }
    let mut segments = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let mut vals = [0.0; 3];
        for (slot, (field, name)) in vals.iter_mut().zip(fields.iter().zip(PROFILE_HEADER)) {
            *slot = field.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                msg: format!("invalid {name} {field:?}"),
            })?;
        }
        segments.push(Segment::new(vals[0], vals[1], vals[2]));
    }
    Ok(CommandProfile::new(segments, sample_rate_hz))
}
