//! Wheel odometry toolkit: quadrature decoding, a framed encoder link,
//! differential-drive dead reckoning, vehicle-to-UGV frame transforms,
//! grid-search calibration of wheel geometry and an ideal simulator to check
//! all of it against.

pub mod calibration;
pub mod circle;
pub mod error;
pub mod export;
pub mod manifest;
pub mod odometry;
pub mod protocol;
pub mod quadrature;
pub mod report;
pub mod simulator;
pub mod ticklog;
pub mod transform;

pub use calibration::{
    grid_search, grid_search_with, predict_experiment, CalibrationResult, CalibrationWarning,
    ExperimentKind, ExperimentRecord, GridSpec, SearchOptions,
};
pub use circle::{circle_diameter, fit_circle, Circle};
pub use error::{Error, Result};
pub use odometry::{
    integrate_log, integrate_step, normalize_angle, path_length, relative_error, ticks_to_travel,
    Pose2D, Trajectory, WheelDelta, WheelParams,
};
pub use protocol::{encode_frame, frames_to_ticklog, parse_stream, EncoderFrame, ParseDiagnostics};
pub use quadrature::{decode_stream, decode_transition, IllegalPolicy, QuadSample, QuadState};
pub use report::{error_report, format_percent, ErrorReport};
pub use simulator::{emit_quadrature, simulate, CommandProfile, GroundTruth, Segment, Simulation};
pub use ticklog::{TickLog, TickSample};
pub use transform::{transform_trajectory, RigidTransform3D, VehicleToUgvOffsets};
