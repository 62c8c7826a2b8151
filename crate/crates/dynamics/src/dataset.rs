//! Binary dataset container (`TWAF`): angle rasters with labels, generating
//! parameters, boundary distances, and optionally the raw velocity rasters,
//! plus a JSON manifest. Little-endian throughout; a trailing CRC32 covers
//! everything between the magic and the checksum.

use crate::warp::AugmentConfig;
use crate::zoo::DynClass;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"TWAF";
const VERSION: u32 = 1;

/// Generation metadata; `seed` fully determines dataset content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub system: String,
    pub param_names: Vec<String>,
    pub sigma: f64,
    pub split: String,
    /// Phase-space window shared by every sample, `[[xmin,xmax],[ymin,ymax]]`.
    pub extent: [[f64; 2]; 2],
    pub augment: Option<AugmentConfig>,
}

/// One labeled (or unlabeled, for external inputs) angle raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: Option<DynClass>,
    pub params: Vec<f64>,
    pub boundary_distance: f64,
    /// Row-major H·W angle raster.
    pub angles: Vec<f32>,
    /// Raw velocity rasters (u, v) when the file carries them.
    pub raw: Option<(Vec<f32>, Vec<f32>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub height: usize,
    pub width: usize,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    VersionMismatch(u32),
    #[error("corrupt dataset: {0}")]
    CorruptPayload(&'static str),
}

fn label_to_byte(label: Option<DynClass>) -> u8 {
    match label {
        Some(DynClass::PointAttractor) => 0,
        Some(DynClass::PeriodicAttractor) => 1,
        None => 2,
    }
}

fn label_from_byte(byte: u8) -> Result<Option<DynClass>, DatasetError> {
    match byte {
        0 => Ok(Some(DynClass::PointAttractor)),
        1 => Ok(Some(DynClass::PeriodicAttractor)),
        2 => Ok(None),
        _ => Err(DatasetError::CorruptPayload("unknown label byte")),
    }
}

/// Serializes the dataset to `path`. Byte output is a pure function of the
/// dataset value.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let raster_len = dataset.height * dataset.width;
    let with_raw = dataset.samples.first().map_or(false, |s| s.raw.is_some());
    for s in &dataset.samples {
        if s.angles.len() != raster_len || s.raw.is_some() != with_raw {
            return Err(DatasetError::CorruptPayload("inconsistent sample shapes"));
        }
    }

    let mut buf = Vec::with_capacity(64 + dataset.samples.len() * raster_len * 12);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dataset.samples.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(dataset.height as u32).to_le_bytes());
    buf.extend_from_slice(&(dataset.width as u32).to_le_bytes());
    buf.push(u8::from(with_raw));
    let manifest =
        serde_json::to_vec(&dataset.manifest).map_err(|_| DatasetError::CorruptPayload("manifest"))?;
    buf.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    buf.extend_from_slice(&manifest);

    for s in &dataset.samples {
        buf.push(label_to_byte(s.label));
        buf.extend_from_slice(&(s.params.len() as u32).to_le_bytes());
        for p in &s.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        buf.extend_from_slice(&s.boundary_distance.to_le_bytes());
        for a in &s.angles {
            buf.extend_from_slice(&a.to_le_bytes());
        }
        if let Some((u, v)) = &s.raw {
            if u.len() != raster_len || v.len() != raster_len {
                return Err(DatasetError::CorruptPayload("inconsistent sample shapes"));
            }
            for x in u.iter().chain(v) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }

    let crc = crc32fast::hash(&buf[MAGIC.len()..]);
    buf.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(DatasetError::CorruptPayload("truncated"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, DatasetError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DatasetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, DatasetError> {
        let bytes = self.take(n * 4)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let crc_start = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[crc_start..].try_into().unwrap());
    if crc32fast::hash(&bytes[MAGIC.len()..crc_start]) != stored {
        return Err(DatasetError::CorruptPayload("checksum mismatch"));
    }

    let mut cur = Cursor { bytes: &bytes[..crc_start], pos: MAGIC.len() };
    let version = cur.u32()?;
    if version != VERSION {
        return Err(DatasetError::VersionMismatch(version));
    }
    let count = cur.u32()? as usize;
    let height = cur.u32()? as usize;
    let width = cur.u32()? as usize;
    let flags = cur.u8()?;
    let with_raw = flags & 1 != 0;
    let manifest_len = cur.u32()? as usize;
    let manifest: Manifest = serde_json::from_slice(cur.take(manifest_len)?)
        .map_err(|_| DatasetError::CorruptPayload("manifest"))?;

    let raster_len = height * width;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let label = label_from_byte(cur.u8()?)?;
        let n_params = cur.u32()? as usize;
        let params = (0..n_params).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?;
        let boundary_distance = cur.f64()?;
        let angles = cur.f32s(raster_len)?;
        let raw = if with_raw { Some((cur.f32s(raster_len)?, cur.f32s(raster_len)?)) } else { None };
        samples.push(Sample { label, params, boundary_distance, angles, raw });
    }
    if cur.pos != cur.bytes.len() {
        return Err(DatasetError::CorruptPayload("trailing bytes"));
    }
    Ok(Dataset { manifest, height, width, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(with_raw: bool) -> Dataset {
        let manifest = Manifest {
            seed: 7,
            system: "simple_oscillator".into(),
            param_names: vec!["a".into(), "omega".into()],
            sigma: 0.1,
            split: "train".into(),
            extent: [[-1.0, 1.0], [-1.0, 1.0]],
            augment: None,
        };
        let sample = |label, bd: f64, base: f32| Sample {
            label,
            params: vec![0.25, -0.5],
            boundary_distance: bd,
            angles: (0..6).map(|i| base + i as f32 * 0.125).collect(),
            raw: with_raw.then(|| ((0..6).map(|i| i as f32).collect(), (0..6).map(|i| -i as f32).collect())),
        };
        Dataset {
            manifest,
            height: 2,
            width: 3,
            samples: vec![
                sample(Some(DynClass::PeriodicAttractor), 0.25, 0.0),
                sample(Some(DynClass::PointAttractor), -0.125, 1.0),
                sample(None, 0.0, -2.0),
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        for with_raw in [false, true] {
            let ds = toy_dataset(with_raw);
            let p1 = dir.path().join(format!("a{with_raw}.twaf"));
            let p2 = dir.path().join(format!("b{with_raw}.twaf"));
            write_dataset(&ds, &p1).unwrap();
            let back = read_dataset(&p1).unwrap();
            assert_eq!(ds, back);
            write_dataset(&back, &p2).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        }
    }

    #[test]
    fn truncation_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.twaf");
        write_dataset(&toy_dataset(true), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(read_dataset(&path), Err(DatasetError::CorruptPayload(_))));
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.twaf");
        write_dataset(&toy_dataset(false), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dataset(&path), Err(DatasetError::CorruptPayload(_))));
    }

    #[test]
    fn wrong_magic_and_version_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.twaf");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(read_dataset(&path), Err(DatasetError::BadMagic)));

        write_dataset(&toy_dataset(false), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9; // bump version, then re-seal the checksum
        let crc_start = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[4..crc_start]);
        bytes[crc_start..].copy_from_slice(&crc.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dataset(&path), Err(DatasetError::VersionMismatch(9))));
    }
}
