//! MOT-Challenge style text records and the binary embedding sidecar.
//!
//! Text layout, one record per line, ten comma-separated fields:
//!
//! ```text
//! frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
//! ```
//!
//! `frame` and `id` are integers (`id = -1` for detections without an
//! identity). The other fields are reals written with the shortest decimal
//! representation that parses back to the same `f64`, so integral values
//! carry no decimal point. Blank lines are ignored.
//!
//! The parser rejects: a field count other than ten, a non-numeric or
//! non-finite field, a non-integer `frame`/`id`, `frame < 1`, and a
//! non-positive width or height. Ground-truth files additionally require
//! `id >= 1`.
//!
//! Sidecar layout (all little-endian): magic `CMEB`, `u32` version (1),
//! `u32` dimension, `u64` row count, then `count * dim` `f32` values, one row
//! per record in file order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIDECAR_MAGIC: [u8; 4] = *b"CMEB";
pub const SIDECAR_VERSION: u32 = 1;
const SIDECAR_HEADER_LEN: usize = 20;

/// Default embedding dimension written by the generator.
pub const DEFAULT_EMBED_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    Detection,
    GroundTruth,
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotRecord {
    pub frame: u32,
    pub id: i64,
    pub bb_left: f64,
    pub bb_top: f64,
    pub bb_width: f64,
    pub bb_height: f64,
    pub conf: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MotRecord {
    /// Record with the three trailing placeholders set to -1.
    pub fn new(frame: u32, id: i64, bbox: [f64; 4], conf: f64) -> Self {
        Self {
            frame,
            id,
            bb_left: bbox[0],
            bb_top: bbox[1],
            bb_width: bbox[2],
            bb_height: bbox[3],
            conf,
            x: -1.0,
            y: -1.0,
            z: -1.0,
        }
    }

    pub fn bbox(&self) -> [f64; 4] {
        [self.bb_left, self.bb_top, self.bb_width, self.bb_height]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.frame < 1 {
            return Err("frame must be >= 1".into());
        }
        let reals = [
            self.bb_left,
            self.bb_top,
            self.bb_width,
            self.bb_height,
            self.conf,
            self.x,
            self.y,
            self.z,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        if !(self.bb_width > 0.0 && self.bb_height > 0.0) {
            return Err("box width and height must be positive".into());
        }
        Ok(())
    }
}

fn parse_int(field: &str) -> Option<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = field.parse().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

fn parse_line(line: &str, kind: RecordKind, lineno: usize) -> Result<MotRecord> {
    let err = |reason: String| Error::Parse {
        line: lineno,
        reason,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(err(format!("expected 10 fields, found {}", fields.len())));
    }
    let frame = parse_int(fields[0]).ok_or_else(|| err(format!("bad frame `{}`", fields[0])))?;
    let id = parse_int(fields[1]).ok_or_else(|| err(format!("bad id `{}`", fields[1])))?;
    let mut reals = [0.0; 8];
    for (slot, field) in reals.iter_mut().zip(&fields[2..]) {
        *slot = field
            .parse::<f64>()
            .map_err(|_| err(format!("bad number `{field}`")))?;
    }
    if frame < 1 || frame > u32::MAX as i64 {
        return Err(err(format!("frame {frame} out of range")));
    }
    let record = MotRecord {
        frame: frame as u32,
        id,
        bb_left: reals[0],
        bb_top: reals[1],
        bb_width: reals[2],
        bb_height: reals[3],
        conf: reals[4],
        x: reals[5],
        y: reals[6],
        z: reals[7],
    };
    record.validate().map_err(err)?;
    if kind == RecordKind::GroundTruth && record.id < 1 {
        return Err(Error::IdRequired { line: lineno });
    }
    Ok(record)
}

/// Parses record text; the result is stably sorted by `(frame, id)`.
pub fn parse_records(text: &str, kind: RecordKind) -> Result<Vec<MotRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(line, kind, i + 1)?);
    }
    records.sort_by_key(|r| (r.frame, r.id));
    Ok(records)
}

pub fn read_records(path: impl AsRef<Path>, kind: RecordKind) -> Result<Vec<MotRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, kind)
}

/// Formats records in the given order, one line each.
pub fn format_records(records: &[MotRecord]) -> Result<String> {
    let mut out = String::with_capacity(records.len() * 48);
    for r in records {
        r.validate().map_err(Error::InvalidRecord)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.frame, r.id, r.bb_left, r.bb_top, r.bb_width, r.bb_height, r.conf, r.x, r.y, r.z
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn write_records(records: &[MotRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_records(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Embedding rows aligned with a record file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: Vec<Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, rows: Vec<Vec<f32>>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        Ok(Self { dim, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SIDECAR_HEADER_LEN + self.rows.len() * self.dim * 4);
        out.extend_from_slice(&SIDECAR_MAGIC);
        out.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        for row in &self.rows {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SIDECAR_HEADER_LEN {
            return Err(Error::HeaderMismatch("truncated header".into()));
        }
        if bytes[0..4] != SIDECAR_MAGIC {
            return Err(Error::HeaderMismatch("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != SIDECAR_VERSION {
            return Err(Error::HeaderMismatch(format!(
                "unsupported version {version}"
            )));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(Error::HeaderMismatch("zero dimension".into()));
        }
        let payload = &bytes[SIDECAR_HEADER_LEN..];
        if count.checked_mul(dim).and_then(|n| n.checked_mul(4)) != Some(payload.len()) {
            return Err(Error::HeaderMismatch(format!(
                "payload of {} bytes does not hold {count} rows of dimension {dim}",
                payload.len()
            )));
        }
        let rows = payload
            .chunks_exact(dim * 4)
            .map(|row| {
                row.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect()
            })
            .collect();
        Ok(Self { dim, rows })
    }

    /// Checks that there is one row per record.
    pub fn check_aligned(&self, records: &[MotRecord]) -> Result<()> {
        if self.rows.len() != records.len() {
            return Err(Error::CountMismatch {
                records: records.len(),
                embeddings: self.rows.len(),
            });
        }
        Ok(())
    }
}

pub fn write_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::decode(&bytes)
}

/// Reads a detection file and its sidecar, keeping rows aligned with the records.
///
/// Records are returned in file order (not re-sorted) so that row `i` of
/// the table belongs to record `i`; the file must already be ordered by frame.
pub fn read_detections_with_embeddings(
    det_path: impl AsRef<Path>,
    emb_path: impl AsRef<Path>,
) -> Result<(Vec<MotRecord>, EmbeddingTable)> {
    let det_path = det_path.as_ref();
    let text = fs::read_to_string(det_path).map_err(|e| Error::io(det_path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(line, RecordKind::Detection, i + 1)?);
    }
    let table = read_embeddings(emb_path)?;
    table.check_aligned(&records)?;
    Ok((records, table))
}
