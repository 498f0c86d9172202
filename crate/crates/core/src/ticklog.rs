//! Cumulative wheel tick logs and their CSV form.
//!
//! ```text
//! timestamp_us,left_ticks,right_ticks
//! 0,0,0
//! 10000,41,39
//! ```

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TICKLOG_HEADER: [&str; 3] = ["timestamp_us", "left_ticks", "right_ticks"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickSample {
    pub timestamp_us: u64,
    pub left_ticks: i64,
    pub right_ticks: i64,
}

impl TickSample {
    pub fn new(timestamp_us: u64, left_ticks: i64, right_ticks: i64) -> Self {
        Self {
            timestamp_us,
            left_ticks,
            right_ticks,
        }
    }
}

/// Cumulative signed tick counts with strictly increasing timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickLog {
    samples: Vec<TickSample>,
}

impl TickLog {
    pub fn new(samples: Vec<TickSample>) -> Result<Self> {
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].timestamp_us <= pair[0].timestamp_us {
                return Err(Error::NonMonotonic {
                    index: i + 1,
                    prev: pair[0].timestamp_us,
                    next: pair[1].timestamp_us,
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TickSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<TickSample> {
        self.samples
    }
}

pub fn read_ticklog_csv(path: &Path) -> Result<TickLog> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_ticklog_csv(file, path)
}

/// Strict parse: exact header, three base-10 integer columns per record.
pub fn parse_ticklog_csv<R: Read>(reader: R, path: &Path) -> Result<TickLog> {
    let rows = read_strict_csv(reader, path, &TICKLOG_HEADER)?;
    let mut samples = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        let timestamp_us = fields[0]
            .parse::<u64>()
            .map_err(|_| parse_err(format!("invalid timestamp {:?}", fields[0])))?;
        let left = fields[1]
            .parse::<i64>()
            .map_err(|_| parse_err(format!("invalid left ticks {:?}", fields[1])))?;
        let right = fields[2]
            .parse::<i64>()
            .map_err(|_| parse_err(format!("invalid right ticks {:?}", fields[2])))?;
        if let Some(prev) = samples.last().map(|s: &TickSample| s.timestamp_us) {
            if timestamp_us <= prev {
                return Err(parse_err(format!(
                    "timestamp {timestamp_us} not after previous {prev}"
                )));
            }
        }
        samples.push(TickSample::new(timestamp_us, left, right));
    }
    TickLog::new(samples)
}

pub fn write_ticklog_csv(log: &TickLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_ticklog(log, file).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_ticklog<W: Write>(log: &TickLog, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TICKLOG_HEADER)?;
    for s in log.samples() {
        w.write_record([
            s.timestamp_us.to_string(),
            s.left_ticks.to_string(),
            s.right_ticks.to_string(),
        ])?;
    }
    w.flush()
}

/// Reads a headed CSV, requiring the exact header and column count on every
/// line. Returns (1-based line number, fields) per record.
pub(crate) fn read_strict_csv<R: Read>(
    reader: R,
    path: &Path,
    header: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                path: path.to_owned(),
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !saw_header {
            if record.iter().ne(header.iter().copied()) {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line,
                    msg: format!("expected header `{}`", header.join(",")),
                });
            }
            saw_header = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                msg: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    if !saw_header {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: format!("missing header `{}`", header.join(",")),
        });
    }
    Ok(rows)
}
