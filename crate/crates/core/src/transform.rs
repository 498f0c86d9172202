//! Rigid transforms between the vehicle frame and the mapping-robot (UGV)
//! frame.
//!
//! Axes are x forward, y left, z up. The built-in vehicle-to-UGV transform
//! has identity rotation and translation `(0, -l0, -h0)`, where `l0` and
//! `h0` are the y and z offsets between the rear-axle centre and the UGV
//! centre.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::odometry::Trajectory;

/// Tolerance for orthonormality and unit determinant.
pub const ROTATION_TOL: f64 = 1e-9;

/// Measured y offset between rear-axle centre and UGV centre (m).
pub const DEFAULT_L0_M: f64 = 1.21;
/// Measured z offset between rear-axle centre and UGV centre (m).
pub const DEFAULT_H0_M: f64 = 0.59;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleToUgvOffsets {
    pub l0_m: f64,
    pub h0_m: f64,
}

impl Default for VehicleToUgvOffsets {
    fn default() -> Self {
        Self {
            l0_m: DEFAULT_L0_M,
            h0_m: DEFAULT_H0_M,
        }
    }
}

impl VehicleToUgvOffsets {
    pub fn new(l0_m: f64, h0_m: f64) -> Result<Self> {
        for (name, v) in [("l0", l0_m), ("h0", h0_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { l0_m, h0_m })
    }
}

/// Proper rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform3D {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform3D {
    /// Rejects rotations that are not orthonormal with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("translation must be finite"));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if gram_err.is_nan() || gram_err > ROTATION_TOL {
            return Err(Error::validation(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {gram_err:e})"
            )));
        }
        let det = rotation.determinant();
        if det.is_nan() || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::validation(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` rad about +z.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
        }
    }

    pub fn vehicle_to_ugv(offsets: VehicleToUgvOffsets) -> Self {
        Self::from_translation(Vector3::new(0.0, -offsets.l0_m, -offsets.h0_m))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform3D) -> RigidTransform3D {
        RigidTransform3D {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> RigidTransform3D {
        let rt = self.rotation.transpose();
        RigidTransform3D {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Yaw of the rotation when it is a pure rotation about z.
    pub fn yaw(&self) -> Option<f64> {
        let r = &self.rotation;
        let about_z = r[(0, 2)].abs() <= ROTATION_TOL
            && r[(1, 2)].abs() <= ROTATION_TOL
            && r[(2, 0)].abs() <= ROTATION_TOL
            && r[(2, 1)].abs() <= ROTATION_TOL
            && (r[(2, 2)] - 1.0).abs() <= ROTATION_TOL;
        about_z.then(|| r[(1, 0)].atan2(r[(0, 0)]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3DSample {
    pub timestamp_us: u64,
    pub position: Vector3<f64>,
    /// Absent when the transform tilts the plane of motion.
    pub heading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3D {
    pub samples: Vec<Pose3DSample>,
    /// Set when headings were dropped because the rotation is not about z.
    pub heading_dropped: bool,
}

/// Lifts planar poses to `z = z_plane` and maps them through `t`.
pub fn transform_trajectory(traj: &Trajectory, t: &RigidTransform3D, z_plane: f64) -> Trajectory3D {
    let yaw = t.yaw();
    let samples = traj
        .samples()
        .iter()
        .map(|s| Pose3DSample {
            timestamp_us: s.timestamp_us,
            position: t.apply(&Vector3::new(s.pose.x, s.pose.y, z_plane)),
            heading: yaw.map(|yaw| s.pose.theta + yaw),
        })
        .collect();
    Trajectory3D {
        samples,
        heading_dropped: yaw.is_none(),
    }
}
