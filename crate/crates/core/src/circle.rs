//! Algebraic (Kåsa) least-squares circle fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::odometry::Trajectory;

/// Singular-value ratio below which the design matrix is treated as rank
/// deficient (collinear or coincident points).
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Circle {
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Fits `x² + y² + D·x + E·y + F = 0` by linear least squares.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 points"));
    }
    if points.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::DegenerateFit("non-finite point"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let scale = (points
        .iter()
        .map(|(x, y)| (x - mean_x).powi(2) + (y - mean_y).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if scale == 0.0 {
        return Err(Error::DegenerateFit("all points coincide"));
    }

    // Centred and scaled to unit RMS radius for conditioning.
    let rows = points.len();
    let mut design = DMatrix::<f64>::zeros(rows, 3);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, (x, y)) in points.iter().enumerate() {
        let u = (x - mean_x) / scale;
        let v = (y - mean_y) / scale;
        design[(i, 0)] = u;
        design[(i, 1)] = v;
        design[(i, 2)] = 1.0;
        rhs[i] = -(u * u + v * v);
    }

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if min_sv.is_nan() || max_sv.is_nan() || min_sv <= RANK_TOL * max_sv {
        return Err(Error::DegenerateFit("points are collinear"));
    }
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::DegenerateFit("least-squares solve failed"))?;
    let (d, e, f) = (coeffs[0], coeffs[1], coeffs[2]);
    let cu = -d / 2.0;
    let cv = -e / 2.0;
    let r_sq = cu * cu + cv * cv - f;
    if !(r_sq > 0.0 && r_sq.is_finite()) {
        return Err(Error::DegenerateFit("no real radius"));
    }
    Ok(Circle {
        center_x: mean_x + cu * scale,
        center_y: mean_y + cv * scale,
        radius: r_sq.sqrt() * scale,
    })
}

/// Diameter of the circle fitted to a trajectory's positions.
pub fn circle_diameter(traj: &Trajectory) -> Result<f64> {
    let points: Vec<(f64, f64)> = traj.poses().map(|p| (p.x, p.y)).collect();
    fit_circle(&points).map(|c| c.diameter())
}
