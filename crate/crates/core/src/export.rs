//! Trajectory CSV output.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::odometry::Trajectory;
use crate::simulator::GroundTruth;
use crate::transform::Trajectory3D;

/// `timestamp_us,x,y,theta`; floats in shortest round-trip form.
pub fn write_trajectory<W: Write>(traj: &Trajectory, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp_us", "x", "y", "theta"])?;
    for s in traj.samples() {
        w.write_record([
            s.timestamp_us.to_string(),
            s.pose.x.to_string(),
            s.pose.y.to_string(),
            s.pose.theta.to_string(),
        ])?;
    }
    w.flush()
}

/// `timestamp_us,x,y,z,theta`; `theta` is empty when the heading was dropped.
pub fn write_trajectory_3d<W: Write>(traj: &Trajectory3D, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp_us", "x", "y", "z", "theta"])?;
    for s in &traj.samples {
        w.write_record([
            s.timestamp_us.to_string(),
            s.position.x.to_string(),
            s.position.y.to_string(),
            s.position.z.to_string(),
            s.heading.map(|h| h.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

/// `timestamp_us,x,y,theta,left_angle_rad,right_angle_rad`.
pub fn write_ground_truth<W: Write>(truth: &GroundTruth, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp_us", "x", "y", "theta", "left_angle_rad", "right_angle_rad"])?;
    let angles = truth.left_angle_rad.iter().zip(&truth.right_angle_rad);
    for (s, (l, r)) in truth.trajectory.samples().iter().zip(angles) {
        w.write_record([
            s.timestamp_us.to_string(),
            s.pose.x.to_string(),
            s.pose.y.to_string(),
            s.pose.theta.to_string(),
            l.to_string(),
            r.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    to_file(path, |f| write_trajectory(traj, f))
}

pub fn write_trajectory_3d_csv(traj: &Trajectory3D, path: &Path) -> Result<()> {
    to_file(path, |f| write_trajectory_3d(traj, f))
}

pub fn write_ground_truth_csv(truth: &GroundTruth, path: &Path) -> Result<()> {
    to_file(path, |f| write_ground_truth(truth, f))
}

fn to_file(path: &Path, body: impl FnOnce(File) -> std::io::Result<()>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    body(File::create(path).map_err(io_err)?).map_err(io_err)
}
