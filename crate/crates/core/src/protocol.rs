//! Framed binary encoder link (`.ticks` files).
//!
//! Each frame is 21 bytes, multi-byte fields little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 2    | sync `0xAA 0x55`                       |
//! | 2      | 1    | version (`1`)                          |
//! | 3      | 8    | timestamp_us, u64                      |
//! | 11     | 4    | left cumulative ticks, i32             |
//! | 15     | 4    | right cumulative ticks, i32            |
//! | 19     | 2    | CRC-16/CCITT-FALSE over bytes 2..=18   |
//!
//! The parser scans for the sync word, checks the CRC and then the version,
//! and on any failure slides forward one byte, so a frame that starts after a
//! corrupted region is always found again.

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_16_IBM_3740};

use crate::error::{Error, Result};
use crate::ticklog::{TickLog, TickSample};

pub const FRAME_LEN: usize = 21;
pub const SYNC: [u8; 2] = [0xAA, 0x55];
pub const PROTOCOL_VERSION: u8 = 1;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, unreflected, no final XOR.
const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

const CRC_START: usize = 2;
const CRC_END: usize = 19;

pub fn crc16(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderFrame {
    pub version: u8,
    pub timestamp_us: u64,
    pub left_cum_ticks: i32,
    pub right_cum_ticks: i32,
}

impl EncoderFrame {
    pub fn new(timestamp_us: u64, left_cum_ticks: i32, right_cum_ticks: i32) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            timestamp_us,
            left_cum_ticks,
            right_cum_ticks,
        }
    }
}

pub fn encode_frame(frame: &EncoderFrame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[0..2].copy_from_slice(&SYNC);
    out[2] = frame.version;
    out[3..11].copy_from_slice(&frame.timestamp_us.to_le_bytes());
    out[11..15].copy_from_slice(&frame.left_cum_ticks.to_le_bytes());
    out[15..19].copy_from_slice(&frame.right_cum_ticks.to_le_bytes());
    let crc = crc16(&out[CRC_START..CRC_END]);
    out[19..21].copy_from_slice(&crc.to_le_bytes());
    out
}

/// Why a sync-aligned 21-byte window was not accepted as a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDefect {
    BadSync,
    BadCrc,
    BadVersion(u8),
}

pub fn decode_frame(bytes: &[u8; FRAME_LEN]) -> std::result::Result<EncoderFrame, FrameDefect> {
    if bytes[0..2] != SYNC {
        return Err(FrameDefect::BadSync);
    }
    let stored = u16::from_le_bytes([bytes[19], bytes[20]]);
    if crc16(&bytes[CRC_START..CRC_END]) != stored {
        return Err(FrameDefect::BadCrc);
    }
    if bytes[2] != PROTOCOL_VERSION {
        return Err(FrameDefect::BadVersion(bytes[2]));
    }
    let field = |range: std::ops::Range<usize>| -> [u8; 4] { bytes[range].try_into().unwrap() };
    Ok(EncoderFrame {
        version: bytes[2],
        timestamp_us: u64::from_le_bytes(bytes[3..11].try_into().unwrap()),
        left_cum_ticks: i32::from_le_bytes(field(11..15)),
        right_cum_ticks: i32::from_le_bytes(field(15..19)),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub bad_crc: usize,
    pub bad_version: usize,
    /// Number of contiguous runs of bytes discarded while hunting for sync.
    pub resyncs: usize,
    /// 1 when the stream ended inside a frame.
    pub trailing_partial: usize,
}

impl ParseDiagnostics {
    pub fn is_clean(&self) -> bool {
        *self == Self::default()
    }
}

/// Resumable frame scanner. Feed byte chunks with [`FrameParser::push`], then
/// call [`FrameParser::finish`].
#[derive(Debug, Default)]
pub struct FrameParser {
    buf: Vec<u8>,
    discarding: bool,
    diag: ParseDiagnostics,
}

impl FrameParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, chunk: &[u8], out: &mut Vec<EncoderFrame>) {
        self.buf.extend_from_slice(chunk);
        let mut pos = 0;
        loop {
            let rest = &self.buf[pos..];
            let Some(offset) = find_sync_start(rest) else {
                self.discard(rest.len());
                pos = self.buf.len();
                break;
            };
            self.discard(offset);
            pos += offset;
            if self.buf.len() - pos < FRAME_LEN {
                break;
            }
            let window: &[u8; FRAME_LEN] = self.buf[pos..pos + FRAME_LEN].try_into().unwrap();
            match decode_frame(window) {
                Ok(frame) => {
                    out.push(frame);
                    pos += FRAME_LEN;
                    self.discarding = false;
                }
                Err(defect) => {
                    match defect {
                        FrameDefect::BadCrc => self.diag.bad_crc += 1,
                        FrameDefect::BadVersion(_) => self.diag.bad_version += 1,
                        FrameDefect::BadSync => unreachable!("window starts at sync"),
                    }
                    self.discard(1);
                    pos += 1;
                }
            }
        }
        self.buf.drain(..pos);
    }

    fn discard(&mut self, n: usize) {
        if n > 0 && !self.discarding {
            self.diag.resyncs += 1;
            self.discarding = true;
        }
    }

    pub fn diagnostics(&self) -> ParseDiagnostics {
        self.diag
    }

    pub fn finish(mut self) -> ParseDiagnostics {
        if !self.buf.is_empty() {
            self.diag.trailing_partial += 1;
        }
        self.diag
    }
}

/// Offset of the first byte that could begin a frame: `AA 55`, or a lone
/// `AA` at the very end.
fn find_sync_start(bytes: &[u8]) -> Option<usize> {
    bytes
        .iter()
        .enumerate()
        .position(|(i, &b)| b == SYNC[0] && bytes.get(i + 1).is_none_or(|&n| n == SYNC[1]))
}

/// Parses a complete byte stream. Never fails; corruption is reported in the
/// diagnostics.
pub fn parse_stream(bytes: &[u8]) -> (Vec<EncoderFrame>, ParseDiagnostics) {
    let mut parser = FrameParser::new();
    let mut frames = Vec::with_capacity(bytes.len() / FRAME_LEN);
    parser.push(bytes, &mut frames);
    (frames, parser.finish())
}

/// Converts frames into a tick log, dropping frames whose timestamp does not
/// advance and unwrapping the 32-bit counters. Returns the log and the number
/// of dropped frames.
///
/// Unwrapping assumes the true change between kept frames is below 2^30
/// counts in magnitude.
pub fn frames_to_ticklog(frames: &[EncoderFrame]) -> Result<(TickLog, usize)> {
    let first = frames.first().ok_or(Error::EmptyInput("frame sequence"))?;
    let mut samples = Vec::with_capacity(frames.len());
    samples.push(TickSample::new(
        first.timestamp_us,
        i64::from(first.left_cum_ticks),
        i64::from(first.right_cum_ticks),
    ));
    let mut prev = *first;
    let mut dropped = 0;
    for frame in &frames[1..] {
        if frame.timestamp_us <= prev.timestamp_us {
            dropped += 1;
            continue;
        }
        let last = samples.last().unwrap();
        let dl = frame.left_cum_ticks.wrapping_sub(prev.left_cum_ticks);
        let dr = frame.right_cum_ticks.wrapping_sub(prev.right_cum_ticks);
        samples.push(TickSample::new(
            frame.timestamp_us,
            last.left_ticks + i64::from(dl),
            last.right_ticks + i64::from(dr),
        ));
        prev = *frame;
    }
    Ok((TickLog::new(samples)?, dropped))
}

/// Frames for a tick log; counters are truncated to 32 bits as the firmware
/// counter would wrap.
pub fn ticklog_to_frames(log: &TickLog) -> Vec<EncoderFrame> {
    log.samples()
        .iter()
        .map(|s| EncoderFrame::new(s.timestamp_us, s.left_ticks as i32, s.right_ticks as i32))
        .collect()
}

pub fn write_ticks_file(log: &TickLog, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = ticklog_to_frames(log)
        .iter()
        .flat_map(encode_frame)
        .collect();
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads a `.ticks` file. Returns the frames and parser diagnostics.
pub fn read_ticks_file(path: &Path) -> Result<(Vec<EncoderFrame>, ParseDiagnostics)> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(parse_stream(&bytes))
}
