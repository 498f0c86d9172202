//! Differential-drive dead reckoning.
//!
//! Wheel increments are integrated with heading taken at the previous pose:
//!
//! ```text
//! x' = x + (d_l + d_r)/2 * cos(theta)
//! y' = y + (d_l + d_r)/2 * sin(theta)
//! theta' = theta + (d_r - d_l) / L
//! ```
//!
//! Heading is never wrapped during integration. Use [`normalize_angle`] for
//! display.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::ticklog::TickLog;

/// Default decoded counts per revolution: 1024 PPR encoders under x4 decoding.
pub const DEFAULT_COUNTS_PER_REV: u32 = 4096;

/// Largest wheel travel accepted between two consecutive samples by default.
pub const DEFAULT_MAX_STEP_M: f64 = 1.0;

/// Wheel geometry and encoder resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelParams {
    /// Lateral distance between the two odometry wheels (m).
    pub wheel_base_m: f64,
    /// Wheel radius (m).
    pub wheel_radius_m: f64,
    /// Decoded counts per mechanical revolution.
    pub counts_per_rev: u32,
}

impl WheelParams {
    pub fn new(wheel_base_m: f64, wheel_radius_m: f64, counts_per_rev: u32) -> Result<Self> {
        let params = Self {
            wheel_base_m,
            wheel_radius_m,
            counts_per_rev,
        };
        params.validate()?;
        Ok(params)
    }

    /// Hand-measured geometry of the flatbed's rear wheels.
    pub fn measured() -> Self {
        Self {
            wheel_base_m: 0.7,
            wheel_radius_m: 0.1575,
            counts_per_rev: DEFAULT_COUNTS_PER_REV,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheel_base_m.is_finite() && self.wheel_base_m > 0.0) {
            return Err(Error::validation(format!(
                "wheel base must be positive, got {}",
                self.wheel_base_m
            )));
        }
        if !(self.wheel_radius_m.is_finite() && self.wheel_radius_m > 0.0) {
            return Err(Error::validation(format!(
                "wheel radius must be positive, got {}",
                self.wheel_radius_m
            )));
        }
        if self.counts_per_rev == 0 {
            return Err(Error::validation("counts per revolution must be positive"));
        }
        Ok(())
    }

    /// Arc length covered by one decoded count (m).
    pub fn tick_quantum_m(&self) -> f64 {
        ticks_to_travel(1, self)
    }
}

/// Planar pose. `theta` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub const ORIGIN: Pose2D = Pose2D {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Arc travel of each wheel between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelDelta {
    pub d_left_m: f64,
    pub d_right_m: f64,
}

impl WheelDelta {
    pub fn new(d_left_m: f64, d_right_m: f64) -> Self {
        Self {
            d_left_m,
            d_right_m,
        }
    }

    /// Signed travel of the axle midpoint.
    pub fn mean_travel_m(&self) -> f64 {
        (self.d_left_m + self.d_right_m) / 2.0
    }

    fn check(&self, step: usize, bound_m: f64) -> Result<()> {
        let ok = |d: f64| d.is_finite() && d.abs() <= bound_m;
        if ok(self.d_left_m) && ok(self.d_right_m) {
            Ok(())
        } else {
            Err(Error::StepTooLarge {
                step,
                d_left_m: self.d_left_m,
                d_right_m: self.d_right_m,
                bound_m,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPose {
    pub timestamp_us: u64,
    pub pose: Pose2D,
    /// Signed midpoint travel of the step ending at this sample; zero for the
    /// first entry.
    pub step_travel_m: f64,
}

/// Timestamped, nonempty pose sequence with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TimedPose>,
}

impl Trajectory {
    pub fn new(timestamp_us: u64, initial: Pose2D) -> Self {
        Self {
            samples: vec![TimedPose {
                timestamp_us,
                pose: initial,
                step_travel_m: 0.0,
            }],
        }
    }

    /// Builds a trajectory from bare poses; step travel is the Euclidean
    /// distance between consecutive positions.
    pub fn from_poses(poses: impl IntoIterator<Item = (u64, Pose2D)>) -> Result<Self> {
        let mut iter = poses.into_iter();
        let (t0, p0) = iter.next().ok_or(Error::EmptyInput("trajectory"))?;
        let mut traj = Trajectory::new(t0, p0);
        for (t, pose) in iter {
            let last = traj.last().pose;
            let travel = (pose.x - last.x).hypot(pose.y - last.y);
            traj.push(t, pose, travel)?;
        }
        Ok(traj)
    }

    pub(crate) fn push(&mut self, timestamp_us: u64, pose: Pose2D, step_travel_m: f64) -> Result<()> {
        let prev = self.last().timestamp_us;
        if timestamp_us <= prev {
            return Err(Error::NonMonotonic {
                index: self.samples.len(),
                prev,
                next: timestamp_us,
            });
        }
        self.samples.push(TimedPose {
            timestamp_us,
            pose,
            step_travel_m,
        });
        Ok(())
    }

    pub fn samples(&self) -> &[TimedPose] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &TimedPose {
        &self.samples[0]
    }

    pub fn last(&self) -> &TimedPose {
        self.samples.last().expect("trajectory is nonempty")
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose2D> + '_ {
        self.samples.iter().map(|s| &s.pose)
    }
}

/// Converts a signed count difference into wheel arc travel (m).
pub fn ticks_to_travel(delta_ticks: i64, params: &WheelParams) -> f64 {
    params.wheel_radius_m * delta_ticks as f64 * TAU / params.counts_per_rev as f64
}

/// One Euler step of the odometry model under the default sanity bound.
pub fn integrate_step(pose: Pose2D, delta: WheelDelta, params: &WheelParams) -> Result<Pose2D> {
    integrate_step_bounded(pose, delta, params, DEFAULT_MAX_STEP_M)
}

pub fn integrate_step_bounded(
    pose: Pose2D,
    delta: WheelDelta,
    params: &WheelParams,
    max_step_m: f64,
) -> Result<Pose2D> {
    delta.check(0, max_step_m)?;
    Ok(step_unchecked(pose, delta, params))
}

pub(crate) fn step_unchecked(pose: Pose2D, delta: WheelDelta, params: &WheelParams) -> Pose2D {
    let travel = delta.mean_travel_m();
    Pose2D {
        x: pose.x + travel * pose.theta.cos(),
        y: pose.y + travel * pose.theta.sin(),
        theta: pose.theta + (delta.d_right_m - delta.d_left_m) / params.wheel_base_m,
    }
}

/// Integrates a cumulative tick log into a trajectory starting at `initial`.
pub fn integrate_log(log: &TickLog, params: &WheelParams, initial: Pose2D) -> Result<Trajectory> {
    integrate_log_bounded(log, params, initial, DEFAULT_MAX_STEP_M)
}

pub fn integrate_log_bounded(
    log: &TickLog,
    params: &WheelParams,
    initial: Pose2D,
    max_step_m: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let samples = log.samples();
    let first = samples.first().ok_or(Error::EmptyInput("tick log"))?;
    let mut traj = Trajectory::new(first.timestamp_us, initial);
    traj.samples.reserve(samples.len() - 1);
    let mut pose = initial;
    for (i, pair) in samples.windows(2).enumerate() {
        let (prev, next) = (pair[0], pair[1]);
        let delta = WheelDelta::new(
            ticks_to_travel(next.left_ticks - prev.left_ticks, params),
            ticks_to_travel(next.right_ticks - prev.right_ticks, params),
        );
        delta.check(i + 1, max_step_m)?;
        pose = step_unchecked(pose, delta, params);
        traj.push(next.timestamp_us, pose, delta.mean_travel_m())?;
    }
    Ok(traj)
}

/// Total distance driven (not displacement).
pub fn path_length(traj: &Trajectory) -> f64 {
    traj.samples().iter().map(|s| s.step_travel_m.abs()).sum()
}

/// `|measured - ground_truth| / ground_truth`.
pub fn relative_error(measured: f64, ground_truth: f64) -> Result<f64> {
    if !(ground_truth.is_finite() && ground_truth > 0.0) {
        return Err(Error::validation(format!(
            "ground truth must be positive, got {ground_truth}"
        )));
    }
    Ok((measured - ground_truth).abs() / ground_truth)
}

/// Wraps an angle into (-pi, pi]. Display only; integration never wraps.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}
