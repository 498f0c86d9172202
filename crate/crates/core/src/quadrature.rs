//! x4 quadrature decoding of A/B encoder channels.
//!
//! Forward rotation is the Gray sequence `00 -> 01 -> 11 -> 10 -> 00`
//! (written `AB`), one count per edge. The reverse sequence counts down. A
//! change of both channels between two samples cannot be attributed to a
//! direction and is reported, never interpolated.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ticklog::{read_strict_csv, TickLog, TickSample};

pub const QUADRATURE_HEADER: [&str; 3] = ["timestamp_us", "a", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct QuadState {
    pub a: bool,
    pub b: bool,
}

impl QuadState {
    /// Forward Gray-code order, indexed by position within one electrical period.
    pub const FORWARD_CYCLE: [QuadState; 4] = [
        QuadState::new(false, false),
        QuadState::new(false, true),
        QuadState::new(true, true),
        QuadState::new(true, false),
    ];

    pub const fn new(a: bool, b: bool) -> Self {
        Self { a, b }
    }

    /// State an ideal encoder shows after `count` forward edges from `00`.
    pub fn for_count(count: i64) -> Self {
        Self::FORWARD_CYCLE[count.rem_euclid(4) as usize]
    }

    fn phase(self) -> u8 {
        match (self.a, self.b) {
            (false, false) => 0,
            (false, true) => 1,
            (true, true) => 2,
            (true, false) => 3,
        }
    }
}

impl fmt::Display for QuadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a as u8, self.b as u8)
    }
}

/// Both channels changed between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IllegalTransition {
    pub from: QuadState,
    pub to: QuadState,
}

/// Count step for one sample-to-sample transition: +1, -1 or 0.
pub fn decode_transition(
    prev: QuadState,
    next: QuadState,
) -> std::result::Result<i8, IllegalTransition> {
    match (next.phase() + 4 - prev.phase()) % 4 {
        0 => Ok(0),
        1 => Ok(1),
        3 => Ok(-1),
        _ => Err(IllegalTransition {
            from: prev,
            to: next,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IllegalPolicy {
    /// Abort at the first illegal transition.
    #[default]
    Fail,
    /// Resynchronize on the offending sample without counting, and tally it.
    SkipAndCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSample {
    pub timestamp_us: u64,
    pub state: QuadState,
}

impl QuadSample {
    pub fn new(timestamp_us: u64, state: QuadState) -> Self {
        Self {
            timestamp_us,
            state,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountSample {
    pub timestamp_us: u64,
    pub count: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodedCounts {
    pub counts: Vec<CountSample>,
    pub illegal_transitions: usize,
}

impl DecodedCounts {
    pub fn final_count(&self) -> i64 {
        self.counts.last().map_or(0, |c| c.count)
    }
}

/// Incremental decoder; feed samples one at a time.
#[derive(Debug, Clone, Default)]
pub struct QuadDecoder {
    policy: IllegalPolicy,
    prev: Option<QuadState>,
    count: i64,
    index: usize,
    illegal: usize,
}

impl QuadDecoder {
    pub fn new(policy: IllegalPolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    /// Consumes one sample and returns the cumulative count after it.
    pub fn push(&mut self, state: QuadState) -> Result<i64> {
        let index = self.index;
        self.index += 1;
        if let Some(prev) = self.prev {
            match decode_transition(prev, state) {
                Ok(step) => self.count += i64::from(step),
                Err(t) => match self.policy {
                    IllegalPolicy::Fail => {
                        return Err(Error::IllegalTransition {
                            index,
                            from: t.from,
                            to: t.to,
                        })
                    }
                    IllegalPolicy::SkipAndCount => self.illegal += 1,
                },
            }
        }
        self.prev = Some(state);
        Ok(self.count)
    }

    pub fn count(&self) -> i64 {
        self.count
    }

    pub fn illegal_transitions(&self) -> usize {
        self.illegal
    }
}

/// Decodes a whole sample stream, counting from zero at the first sample.
pub fn decode_stream(stream: &[QuadSample], policy: IllegalPolicy) -> Result<DecodedCounts> {
    let mut decoder = QuadDecoder::new(policy);
    let mut counts = Vec::with_capacity(stream.len());
    let mut prev_t = None;
    for (index, s) in stream.iter().enumerate() {
        if let Some(prev) = prev_t {
            if s.timestamp_us < prev {
                return Err(Error::NonMonotonic {
                    index,
                    prev,
                    next: s.timestamp_us,
                });
            }
        }
        prev_t = Some(s.timestamp_us);
        let count = decoder.push(s.state)?;
        counts.push(CountSample {
            timestamp_us: s.timestamp_us,
            count,
        });
    }
    Ok(DecodedCounts {
        counts,
        illegal_transitions: decoder.illegal_transitions(),
    })
}

/// Joins two per-wheel count streams into a tick log over the union of their
/// timestamps. Each wheel holds its latest count; before its first sample a
/// wheel reads 0. Where a timestamp repeats, the last count wins.
pub fn merge_wheel_counts(left: &[CountSample], right: &[CountSample]) -> TickLog {
    let (mut li, mut ri) = (0, 0);
    let (mut lc, mut rc) = (0i64, 0i64);
    let mut samples: Vec<TickSample> = Vec::with_capacity(left.len().max(right.len()));
    while li < left.len() || ri < right.len() {
        let t = match (left.get(li), right.get(ri)) {
            (Some(l), Some(r)) => l.timestamp_us.min(r.timestamp_us),
            (Some(l), None) => l.timestamp_us,
            (None, Some(r)) => r.timestamp_us,
            (None, None) => unreachable!(),
        };
        while let Some(l) = left.get(li).filter(|l| l.timestamp_us == t) {
            lc = l.count;
            li += 1;
        }
        while let Some(r) = right.get(ri).filter(|r| r.timestamp_us == t) {
            rc = r.count;
            ri += 1;
        }
        samples.push(TickSample::new(t, lc, rc));
    }
    TickLog::new(samples).expect("merged timestamps are strictly increasing")
}

pub fn read_quadrature_csv(path: &Path) -> Result<Vec<QuadSample>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_quadrature_csv(file, path)
}

/// Parses `timestamp_us,a,b` rows with levels restricted to `0`/`1`.
pub fn parse_quadrature_csv<R: Read>(reader: R, path: &Path) -> Result<Vec<QuadSample>> {
    let rows = read_strict_csv(reader, path, &QUADRATURE_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        let timestamp_us = fields[0]
            .parse::<u64>()
            .map_err(|_| parse_err(format!("invalid timestamp {:?}", fields[0])))?;
        let level = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(format!("level must be 0 or 1, got {other:?}"))),
        };
        let state = QuadState::new(level(&fields[1])?, level(&fields[2])?);
        if let Some(prev) = out.last().map(|s: &QuadSample| s.timestamp_us) {
            if timestamp_us < prev {
                return Err(parse_err(format!(
                    "timestamp {timestamp_us} precedes previous {prev}"
                )));
            }
        }
        out.push(QuadSample::new(timestamp_us, state));
    }
    Ok(out)
}

pub fn write_quadrature_csv(stream: &[QuadSample], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_quadrature(stream, file).map_err(io_err)
}

pub fn write_quadrature<W: Write>(stream: &[QuadSample], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(QUADRATURE_HEADER)?;
    for s in stream {
        w.write_record([
            s.timestamp_us.to_string(),
            (s.state.a as u8).to_string(),
            (s.state.b as u8).to_string(),
        ])?;
    }
    w.flush()
}
