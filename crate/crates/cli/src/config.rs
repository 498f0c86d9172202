//! Optional TOML configuration file. Command-line flags override these
//! values, which override the built-in defaults.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use wheelodo_core::{Error, RigidTransform3D, Result, VehicleToUgvOffsets};

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub wheel_base: Option<f64>,
    pub wheel_radius: Option<f64>,
    pub counts_per_rev: Option<u32>,
    pub max_step: Option<f64>,
    pub l0: Option<f64>,
    pub h0: Option<f64>,
    /// Row-major 3x3 vehicle-to-UGV rotation; replaces the l0/h0 model
    /// together with `translation`.
    pub rotation: Option<[f64; 9]>,
    pub translation: Option<[f64; 3]>,
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n: Option<usize>,
    pub measured_wheel_base: Option<f64>,
    pub measured_wheel_radius: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: line_of(text, e.span().map_or(0, |s| s.start)),
            msg: e.message().to_string(),
        })
    }

    /// Vehicle-to-UGV transform: explicit rotation/translation if given,
    /// otherwise the offset model with `l0`/`h0` (flag values win).
    pub fn ugv_transform(&self, l0: Option<f64>, h0: Option<f64>) -> Result<RigidTransform3D> {
        match (self.rotation, self.translation) {
            (Some(r), Some(t)) if l0.is_none() && h0.is_none() => {
                RigidTransform3D::new(Matrix3::from_row_slice(&r), Vector3::from(t))
            }
            (Some(_), None) | (None, Some(_)) => Err(Error::Validation(
                "config must give both rotation and translation, or neither".into(),
            )),
            _ => {
                let defaults = VehicleToUgvOffsets::default();
                let offsets = VehicleToUgvOffsets::new(
                    l0.or(self.l0).unwrap_or(defaults.l0_m),
                    h0.or(self.h0).unwrap_or(defaults.h0_m),
                )?;
                Ok(RigidTransform3D::vehicle_to_ugv(offsets))
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> u64 {
    1 + text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count() as u64
}
