//! Binary CIR recording format.
//!
//! Layout (little-endian): magic `CSND`, `u16` format version, `u32` header
//! length, UTF-8 JSON header, then fixed-size records:
//! `u64` timestamp ns, `u16` node, `u8` array, `u16` beam (0xFFFF omni),
//! `u32` tap count, `f32` power reference dBm, and tap count × (`f32` re, `f32` im).

use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::SystemCalibration;
use crate::campaign::{ReceiverKind, Seeds, TxRxSchedule};
use crate::config::SounderConfig;
use crate::receiver::{CaptureMeta, Cir};

pub const MAGIC: &[u8; 4] = b"CSND";
pub const FORMAT_VERSION: u16 = 1;
/// Bytes before the taps in every record.
pub const RECORD_PREFIX_LEN: usize = 8 + 2 + 1 + 2 + 4 + 4;
const PREAMBLE_LEN: usize = 4 + 2 + 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordingError {
    #[error("bad magic at offset 0")]
    BadMagic,
    #[error("unsupported format version {found} at offset 4")]
    Version { found: u16 },
    #[error("truncated at offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("invalid header at offset {offset}: {message}")]
    Header { offset: usize, message: String },
    #[error("record at offset {offset} has {got} taps, file uses {expected}")]
    TapCount { offset: usize, expected: u32, got: u32 },
    #[error("header declares {declared} records, body holds {found} (offset {offset})")]
    CountMismatch { declared: u64, found: u64, offset: usize },
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub config: SounderConfig,
    pub receiver: ReceiverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<SystemCalibration>,
    pub scene_hash: String,
    pub schedule_digest: String,
    pub schedule: TxRxSchedule,
    pub seeds: Seeds,
    pub record_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirRecord {
    pub timestamp_ns: u64,
    pub node_id: u16,
    pub array_id: u8,
    pub beam_id: u16,
    pub power_reference_dbm: f32,
    pub taps: Vec<Complex32>,
}

impl CirRecord {
    pub fn from_cir(cir: &Cir) -> Self {
        Self {
            timestamp_ns: (cir.meta.timestamp_s * 1e9).round().max(0.0) as u64,
            node_id: cir.meta.node_id,
            array_id: cir.meta.array_id,
            beam_id: cir.meta.beam_id,
            power_reference_dbm: cir.power_reference_dbm as f32,
            taps: cir.taps.iter().map(|t| Complex32::new(t.re as f32, t.im as f32)).collect(),
        }
    }

    pub fn to_cir(&self, tap_spacing_s: f64) -> Cir {
        Cir {
            taps: self.taps.iter().map(|t| Complex64::new(t.re as f64, t.im as f64)).collect(),
            tap_spacing_s,
            power_reference_dbm: self.power_reference_dbm as f64,
            meta: CaptureMeta {
                timestamp_s: self.timestamp_ns as f64 * 1e-9,
                node_id: self.node_id,
                array_id: self.array_id,
                beam_id: self.beam_id,
            },
        }
    }

    pub fn encoded_len(&self) -> usize {
        RECORD_PREFIX_LEN + 8 * self.taps.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub header: RecordingHeader,
    pub records: Vec<CirRecord>,
}

impl Recording {
    pub fn cirs(&self) -> impl Iterator<Item = Cir> + '_ {
        let spacing = self.header.config.tap_spacing_s();
        self.records.iter().map(move |r| r.to_cir(spacing))
    }

    /// Snapshot index of a record from its timestamp.
    pub fn snapshot_of(&self, rec: &CirRecord) -> u64 {
        let s = &self.header.schedule;
        let t = rec.timestamp_ns as f64 * 1e-9 - s.epoch_s;
        (t / s.snapshot_period_s + 1e-6).floor().max(0.0) as u64
    }

    /// Records grouped by snapshot, in file order.
    pub fn by_snapshot(&self) -> Vec<Vec<&CirRecord>> {
        let n = self.header.schedule.n_snapshots as usize;
        let mut groups: Vec<Vec<&CirRecord>> = vec![Vec::new(); n];
        for r in &self.records {
            let s = self.snapshot_of(r) as usize;
            if s < n {
                groups[s].push(r);
            }
        }
        groups
    }
}

pub fn write_recording(rec: &Recording) -> Result<Vec<u8>, RecordingError> {
    let mut header = rec.header.clone();
    header.record_count = rec.records.len() as u64;
    let json = serde_json::to_vec(&header).map_err(|e| RecordingError::Header { offset: PREAMBLE_LEN, message: e.to_string() })?;
    let header_len = u32::try_from(json.len())
        .map_err(|_| RecordingError::Header { offset: 6, message: "header exceeds 4 GiB".into() })?;
    let n_taps = rec.records.first().map(|r| r.taps.len());
    let body: usize = rec.records.iter().map(|r| r.encoded_len()).sum();
    let mut out = Vec::with_capacity(PREAMBLE_LEN + json.len() + body);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&json);
    for r in &rec.records {
        if Some(r.taps.len()) != n_taps {
            return Err(RecordingError::TapCount {
                offset: out.len(),
                expected: n_taps.unwrap_or(0) as u32,
                got: r.taps.len() as u32,
            });
        }
        out.extend_from_slice(&r.timestamp_ns.to_le_bytes());
        out.extend_from_slice(&r.node_id.to_le_bytes());
        out.push(r.array_id);
        out.extend_from_slice(&r.beam_id.to_le_bytes());
        out.extend_from_slice(&(r.taps.len() as u32).to_le_bytes());
        out.extend_from_slice(&r.power_reference_dbm.to_le_bytes());
        for t in &r.taps {
            out.extend_from_slice(&t.re.to_le_bytes());
            out.extend_from_slice(&t.im.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], RecordingError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(RecordingError::Truncated { offset: self.pos, what }),
        }
    }

    fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N], RecordingError> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

fn read_header(c: &mut Cursor) -> Result<RecordingHeader, RecordingError> {
    if c.bytes.len() < 4 || &c.bytes[..4] != MAGIC {
        return Err(RecordingError::BadMagic);
    }
    c.pos = 4;
    let version = u16::from_le_bytes(c.array("format version")?);
    if version != FORMAT_VERSION {
        return Err(RecordingError::Version { found: version });
    }
    let len = u32::from_le_bytes(c.array("header length")?) as usize;
    let start = c.pos;
    let json = c.take(len, "header")?;
    serde_json::from_slice(json).map_err(|e| RecordingError::Header { offset: start, message: e.to_string() })
}

fn read_record(c: &mut Cursor, expected_taps: Option<u32>) -> Result<CirRecord, RecordingError> {
    let start = c.pos;
    let prefix = c.take(RECORD_PREFIX_LEN, "record prefix")?;
    let timestamp_ns = u64::from_le_bytes(prefix[0..8].try_into().expect("8"));
    let node_id = u16::from_le_bytes(prefix[8..10].try_into().expect("2"));
    let array_id = prefix[10];
    let beam_id = u16::from_le_bytes(prefix[11..13].try_into().expect("2"));
    let n_taps = u32::from_le_bytes(prefix[13..17].try_into().expect("4"));
    let power_reference_dbm = f32::from_le_bytes(prefix[17..21].try_into().expect("4"));
    if let Some(e) = expected_taps {
        if e != n_taps {
            return Err(RecordingError::TapCount { offset: start, expected: e, got: n_taps });
        }
    }
    let raw = c.take((n_taps as usize).saturating_mul(8), "record taps").map_err(|_| {
        c.pos = start;
        RecordingError::Truncated { offset: start, what: "record taps" }
    })?;
    let taps = raw
        .chunks_exact(8)
        .map(|b| {
            Complex32::new(
                f32::from_le_bytes(b[0..4].try_into().expect("4")),
                f32::from_le_bytes(b[4..8].try_into().expect("4")),
            )
        })
        .collect();
    Ok(CirRecord { timestamp_ns, node_id, array_id, beam_id, power_reference_dbm, taps })
}

/// Reads every record the bytes hold, returning them with the first error
/// met (if any). Header errors leave nothing to salvage.
pub fn read_recording_salvage(bytes: &[u8]) -> Result<(Recording, Option<RecordingError>), RecordingError> {
    let mut c = Cursor { bytes, pos: 0 };
    let header = read_header(&mut c)?;
    let mut records = Vec::new();
    let mut expected = None;
    let mut error = None;
    while c.pos < bytes.len() {
        let start = c.pos;
        match read_record(&mut c, expected) {
            Ok(r) => {
                expected = Some(r.taps.len() as u32);
                records.push(r);
            }
            Err(e) => {
                c.pos = start;
                error = Some(e);
                break;
            }
        }
    }
    if error.is_none() && records.len() as u64 != header.record_count {
        error = Some(RecordingError::CountMismatch {
            declared: header.record_count,
            found: records.len() as u64,
            offset: c.pos,
        });
    }
    Ok((Recording { header, records }, error))
}

pub fn read_recording(bytes: &[u8]) -> Result<Recording, RecordingError> {
    match read_recording_salvage(bytes)? {
        (rec, None) => Ok(rec),
        (_, Some(e)) => Err(e),
    }
}

pub fn save_recording(rec: &Recording, path: impl AsRef<std::path::Path>) -> Result<(), RecordingError> {
    let bytes = write_recording(rec)?;
    std::fs::write(path, bytes).map_err(|e| RecordingError::Io(e.to_string()))
}

pub fn load_recording(path: impl AsRef<std::path::Path>) -> Result<Recording, RecordingError> {
    let bytes = std::fs::read(path).map_err(|e| RecordingError::Io(e.to_string()))?;
    read_recording(&bytes)
}
