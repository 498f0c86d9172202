//! Experiment manifests: `kind,gt_value_m,log_path`.
//!
//! Relative log paths resolve against the manifest's directory. Logs ending
//! in `.ticks` are read as binary frame streams, anything else as tick-log
//! CSV.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::calibration::{ExperimentKind, ExperimentRecord};
use crate::error::{Error, Result};
use crate::protocol::{frames_to_ticklog, read_ticks_file, ParseDiagnostics};
use crate::ticklog::{read_strict_csv, read_ticklog_csv, TickLog};

pub const MANIFEST_HEADER: [&str; 3] = ["kind", "gt_value_m", "log_path"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub kind: ExperimentKind,
    pub gt_value_m: f64,
    /// Resolved path of the experiment's log.
    pub log_path: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(file, path, base)
}

pub fn parse_manifest<R: Read>(reader: R, path: &Path, base: &Path) -> Result<Vec<ManifestEntry>> {
    let rows = read_strict_csv(reader, path, &MANIFEST_HEADER)?;
    rows.into_iter()
        .map(|(line, fields)| {
            let parse_err = |msg: String| Error::Parse {
                path: path.to_owned(),
                line,
                msg,
            };
            let kind = fields[0]
                .parse::<ExperimentKind>()
                .map_err(|e| parse_err(e.to_string()))?;
            let gt_value_m = fields[1]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| parse_err(format!("gt_value_m must be a positive number, got {:?}", fields[1])))?;
            if fields[2].is_empty() {
                return Err(parse_err("empty log_path".into()));
            }
            Ok(ManifestEntry {
                kind,
                gt_value_m,
                log_path: base.join(&fields[2]),
            })
        })
        .collect()
}

/// Reads a tick log from CSV or `.ticks`; binary diagnostics are returned
/// for the caller to report.
pub fn read_log(path: &Path) -> Result<(TickLog, Option<(ParseDiagnostics, usize)>)> {
    if path.extension().is_some_and(|e| e == "ticks") {
        let (frames, diag) = read_ticks_file(path)?;
        let (log, dropped) = frames_to_ticklog(&frames).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            msg: e.to_string(),
        })?;
        Ok((log, Some((diag, dropped))))
    } else {
        Ok((read_ticklog_csv(path)?, None))
    }
}

pub fn load_experiment(entry: &ManifestEntry) -> Result<ExperimentRecord> {
    let (log, _) = read_log(&entry.log_path)?;
    ExperimentRecord::new(entry.kind, entry.gt_value_m, log)
}
