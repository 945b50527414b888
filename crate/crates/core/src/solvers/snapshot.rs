//! Binary snapshot export.
//!
//! A trajectory is stored as `<stem>.bin` (concatenated records) plus a JSON
//! sidecar `<stem>.json`. Each record is little-endian:
//!
//! | offset | size        | content                          |
//! |--------|-------------|----------------------------------|
//! | 0      | 8           | magic `IBWSNAP1`                 |
//! | 8      | 8           | half length `L` (f64)            |
//! | 16     | 8           | point count `N` (u64)            |
//! | 24     | 4           | field count `F` (u32)            |
//! | 28     | 4           | reserved, zero                   |
//! | 32     | 8           | time `t` (f64)                   |
//! | 40     | `8 * F * N` | samples, field by field (f64)    |
//!
//! The sidecar records the parameters, the family, the step control, the
//! field names and one SHA-256 checksum per record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IBState, ModelFamily, StepControl, WaveState};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::{Field, PeriodicGrid};

pub const MAGIC: &[u8; 8] = b"IBWSNAP1";
pub const HEADER_LEN: usize = 40;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRecord {
    pub half_length: f64,
    pub n_points: usize,
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
}

impl SnapshotRecord {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 8 * self.fields.len() * self.n_points
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.half_length.to_le_bytes());
        out.extend_from_slice(&(self.n_points as u64).to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for field in &self.fields {
            debug_assert_eq!(field.len(), self.n_points);
            for v in field {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decode one record from the front of `bytes`; returns it with its length.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("truncated record header".into()));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let half_length = f64_at(8);
        let n_points = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let n_fields = u32::from_le_bytes(bytes[24..28].try_into().unwrap()) as usize;
        let time = f64_at(32);
        let len = n_fields
            .checked_mul(n_points)
            .and_then(|v| v.checked_mul(8))
            .and_then(|v| v.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Format("record size overflow".into()))?;
        if bytes.len() < len {
            return Err(Error::Format(format!(
                "truncated record: need {len} bytes, have {}",
                bytes.len()
            )));
        }
        let fields = (0..n_fields)
            .map(|f| {
                (0..n_points)
                    .map(|j| f64_at(HEADER_LEN + 8 * (f * n_points + j)))
                    .collect()
            })
            .collect();
        Ok((
            Self {
                half_length,
                n_points,
                time,
                fields,
            },
            len,
        ))
    }

    fn from_fields(time: f64, fields: &[&Field]) -> Self {
        let grid = fields[0].grid();
        Self {
            half_length: grid.half_length(),
            n_points: grid.n_points(),
            time,
            fields: fields.iter().map(|f| f.values().to_vec()).collect(),
        }
    }

    fn field(&self, grid: &PeriodicGrid, index: usize) -> Result<Field> {
        let values = self
            .fields
            .get(index)
            .ok_or_else(|| Error::Format(format!("record has no field {index}")))?;
        Field::new(grid, values.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Ib,
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub time: f64,
    pub offset: u64,
    pub length: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub kind: TrajectoryKind,
    pub fields: Vec<String>,
    pub half_length: f64,
    pub n_points: usize,
    pub params: PhysParams,
    pub family: Option<ModelFamily>,
    pub control: StepControl,
    pub records: Vec<RecordEntry>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

fn write_records(stem: &Path, records: &[SnapshotRecord], mut sidecar: Sidecar) -> Result<Sidecar> {
    let (bin_path, json_path) = paths(stem);
    let mut bytes = Vec::new();
    for r in records {
        let enc = r.encode();
        sidecar.records.push(RecordEntry {
            time: r.time,
            offset: bytes.len() as u64,
            length: enc.len() as u64,
            sha256: hex::encode(Sha256::digest(&enc)),
        });
        bytes.extend_from_slice(&enc);
    }
    fs::write(&bin_path, &bytes).map_err(|e| Error::io(&bin_path, e))?;
    let json = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(sidecar)
}

fn sidecar_for(
    kind: TrajectoryKind,
    fields: &[&str],
    grid: &PeriodicGrid,
    params: PhysParams,
    family: Option<ModelFamily>,
    control: &StepControl,
) -> Sidecar {
    Sidecar {
        format: "ibwave-snapshot".into(),
        version: FORMAT_VERSION,
        kind,
        fields: fields.iter().map(|s| s.to_string()).collect(),
        half_length: grid.half_length(),
        n_points: grid.n_points(),
        params,
        family,
        control: *control,
        records: Vec::new(),
    }
}

/// Write a model trajectory to `<stem>.bin` / `<stem>.json`.
pub fn write_model_trajectory(
    stem: &Path,
    traj: &[WaveState],
    control: &StepControl,
) -> Result<Sidecar> {
    let first = traj
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let sidecar = sidecar_for(
        TrajectoryKind::Model,
        &["w"],
        first.w.grid(),
        first.params,
        Some(first.family),
        control,
    );
    let records: Vec<_> = traj
        .iter()
        .map(|s| SnapshotRecord::from_fields(s.t, &[&s.w]))
        .collect();
    write_records(stem, &records, sidecar)
}

/// Write an IB trajectory (`u`, `u_t`) to `<stem>.bin` / `<stem>.json`.
pub fn write_ib_trajectory(
    stem: &Path,
    traj: &[IBState],
    control: &StepControl,
) -> Result<Sidecar> {
    let first = traj
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let sidecar = sidecar_for(
        TrajectoryKind::Ib,
        &["u", "u_t"],
        first.u.grid(),
        first.params,
        None,
        control,
    );
    let records: Vec<_> = traj
        .iter()
        .map(|s| SnapshotRecord::from_fields(s.t, &[&s.u, &s.p]))
        .collect();
    write_records(stem, &records, sidecar)
}

/// Read a trajectory back, verifying every checksum.
pub fn read_trajectory(stem: &Path) -> Result<(Sidecar, Vec<SnapshotRecord>)> {
    let (bin_path, json_path) = paths(stem);
    let json = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&json)?;
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let mut records = Vec::with_capacity(sidecar.records.len());
    for entry in &sidecar.records {
        let start = entry.offset as usize;
        let end = start
            .checked_add(entry.length as usize)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format("record extends past end of file".into()))?;
        let chunk = &bytes[start..end];
        if hex::encode(Sha256::digest(chunk)) != entry.sha256 {
            return Err(Error::Format(format!(
                "checksum mismatch for record at t={}",
                entry.time
            )));
        }
        let (rec, _) = SnapshotRecord::decode(chunk)?;
        if rec.n_points != sidecar.n_points || rec.fields.len() != sidecar.fields.len() {
            return Err(Error::Format("record shape disagrees with sidecar".into()));
        }
        records.push(rec);
    }
    Ok((sidecar, records))
}

fn sidecar_grid(sidecar: &Sidecar) -> Result<PeriodicGrid> {
    PeriodicGrid::new(sidecar.half_length, sidecar.n_points)
}

/// Rebuild model states from a stored trajectory.
pub fn load_model_trajectory(stem: &Path) -> Result<(Sidecar, Vec<WaveState>)> {
    let (sidecar, records) = read_trajectory(stem)?;
    let family = match (sidecar.kind, sidecar.family) {
        (TrajectoryKind::Model, Some(f)) => f,
        _ => return Err(Error::Format("not a model trajectory".into())),
    };
    let grid = sidecar_grid(&sidecar)?;
    let states = records
        .iter()
        .map(|r| {
            Ok(WaveState {
                w: r.field(&grid, 0)?,
                t: r.time,
                params: sidecar.params,
                family,
            })
        })
        .collect::<Result<_>>()?;
    Ok((sidecar, states))
}

/// Rebuild IB states from a stored trajectory.
pub fn load_ib_trajectory(stem: &Path) -> Result<(Sidecar, Vec<IBState>)> {
    let (sidecar, records) = read_trajectory(stem)?;
    if sidecar.kind != TrajectoryKind::Ib {
        return Err(Error::Format("not an IB trajectory".into()));
    }
    let grid = sidecar_grid(&sidecar)?;
    let states = records
        .iter()
        .map(|r| {
            Ok(IBState {
                u: r.field(&grid, 0)?,
                p: r.field(&grid, 1)?,
                t: r.time,
                params: sidecar.params,
            })
        })
        .collect::<Result<_>>()?;
    Ok((sidecar, states))
}
