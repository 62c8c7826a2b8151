//! Model persistence: a JSON manifest (architecture, seed, tensor table)
//! followed by little-endian f32 payload in manifest order and a CRC32 over
//! everything after the magic. Writing the same model twice yields identical
//! bytes.

use crate::model::{ArchConfig, Model};
use crate::tensor::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"TWCK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    arch: ArchConfig,
    /// Seed the training run was launched with; provenance only.
    seed: u64,
    /// Payload element type; only "f32" exists in version 1.
    dtype: String,
    tensors: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionMismatch(u32),
    #[error("corrupt checkpoint: {0}")]
    CorruptPayload(&'static str),
    #[error("manifest does not describe this architecture: {0}")]
    ShapeManifestMismatch(String),
}

impl From<serde_json::Error> for CheckpointError {
    fn from(_: serde_json::Error) -> Self {
        CheckpointError::CorruptPayload("manifest is not valid JSON")
    }
}

/// Serializes the model (f64 models are stored at f32 precision).
pub fn save<S: Scalar>(model: &Model<S>, seed: u64, path: &Path) -> Result<(), CheckpointError> {
    let entries = model.entries();
    let manifest = Manifest {
        version: VERSION,
        arch: model.arch.clone(),
        seed,
        dtype: "f32".to_string(),
        tensors: entries
            .iter()
            .map(|(name, shape, _)| TensorInfo { name: name.clone(), shape: shape.clone() })
            .collect(),
    };
    let mjson = serde_json::to_vec(&manifest).expect("manifest serializes");

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(mjson.len() as u32).to_le_bytes());
    buf.extend_from_slice(&mjson);
    for (_, _, data) in &entries {
        for &x in data.iter() {
            buf.extend_from_slice(&(x.to_f64() as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf[MAGIC.len()..]);
    buf.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, buf)?;
    Ok(())
}

/// Restores a model and the seed recorded at save time.
pub fn load(path: &Path) -> Result<(Model<f32>, u64), CheckpointError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let crc_start = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[crc_start..].try_into().unwrap());
    if crc32fast::hash(&bytes[MAGIC.len()..crc_start]) != stored {
        return Err(CheckpointError::CorruptPayload("checksum mismatch"));
    }

    let mlen_at = MAGIC.len();
    let mlen = u32::from_le_bytes(bytes[mlen_at..mlen_at + 4].try_into().unwrap()) as usize;
    let mstart = mlen_at + 4;
    if mstart + mlen > crc_start {
        return Err(CheckpointError::CorruptPayload("manifest length out of range"));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[mstart..mstart + mlen])?;
    if manifest.version != VERSION {
        return Err(CheckpointError::VersionMismatch(manifest.version));
    }
    if manifest.dtype != "f32" {
        return Err(CheckpointError::CorruptPayload("unsupported payload dtype"));
    }

    let mut model = Model::<f32>::init(manifest.arch.clone(), 0);
    let mut entries = model.entries_mut();
    if manifest.tensors.len() != entries.len() {
        return Err(CheckpointError::ShapeManifestMismatch(format!(
            "{} tensors in manifest, architecture has {}",
            manifest.tensors.len(),
            entries.len()
        )));
    }
    let mut pos = mstart + mlen;
    for (info, (name, shape, data)) in manifest.tensors.iter().zip(entries.iter_mut()) {
        if info.name != *name || info.shape != *shape {
            return Err(CheckpointError::ShapeManifestMismatch(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                info.name, info.shape, name, shape
            )));
        }
        let need = data.len() * 4;
        if pos + need > crc_start {
            return Err(CheckpointError::CorruptPayload("payload truncated"));
        }
        for x in data.iter_mut() {
            *x = f32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
            pos += 4;
        }
    }
    if pos != crc_start {
        return Err(CheckpointError::CorruptPayload("trailing payload bytes"));
    }
    Ok((model, manifest.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputMode;
    use crate::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arch() -> ArchConfig {
        ArchConfig {
            channels: [2, 2, 4, 4],
            attention: true,
            input_mode: InputMode::Angles,
            input_hw: 16,
            hidden: 6,
            latent: 4,
            dropout: 0.9,
            leaky_slope: 0.01,
        }
    }

    #[test]
    fn round_trip_preserves_bits_and_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.twck");
        let model = Model::<f32>::init(arch(), 44);
        save(&model, 44, &path).unwrap();
        let (loaded, seed) = load(&path).unwrap();
        assert_eq!(seed, 44);
        for ((_, _, a), (_, _, b)) in model.entries().iter().zip(loaded.entries()) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::new(vec![1, 16, 16], (0..256).map(|_| rng.gen_range(-3.0..3.0)).collect());
        let p0 = model.predict(&x, 10, 5).unwrap();
        let p1 = loaded.predict(&x, 10, 5).unwrap();
        assert_eq!(p0.point_logit.to_bits(), p1.point_logit.to_bits());
        assert_eq!(p0.cycle_logit.to_bits(), p1.cycle_logit.to_bits());

        // Save of the loaded model reproduces the file byte for byte.
        let path2 = dir.path().join("m2.twck");
        save(&loaded, 44, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.twck");
        save(&Model::<f32>::init(arch(), 1), 1, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::BadMagic)));

        let mut bad = good.clone();
        let mid = good.len() / 2;
        bad[mid] ^= 0xFF;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::CorruptPayload(_))));
    }

    #[test]
    fn edited_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.twck");
        save(&Model::<f32>::init(arch(), 1), 1, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        // Rename a tensor inside the manifest, then fix up the checksum so
        // only the manifest check can object.
        let mlen = u32::from_le_bytes(good[4..8].try_into().unwrap()) as usize;
        let mut text = String::from_utf8(good[8..8 + mlen].to_vec()).unwrap();
        assert!(text.contains("conv1.w"));
        text = text.replacen("conv1.w", "conv1.x", 1);
        let mut bad = Vec::new();
        bad.extend_from_slice(&good[..4]);
        bad.extend_from_slice(&(text.len() as u32).to_le_bytes());
        bad.extend_from_slice(text.as_bytes());
        bad.extend_from_slice(&good[8 + mlen..good.len() - 4]);
        let crc = crc32fast::hash(&bad[4..]);
        bad.extend_from_slice(&crc.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::ShapeManifestMismatch(_))));

        // Same trick on the version field.
        let text2 = String::from_utf8(good[8..8 + mlen].to_vec())
            .unwrap()
            .replacen("\"version\":1", "\"version\":9", 1);
        let mut bad2 = Vec::new();
        bad2.extend_from_slice(&good[..4]);
        bad2.extend_from_slice(&(text2.len() as u32).to_le_bytes());
        bad2.extend_from_slice(text2.as_bytes());
        bad2.extend_from_slice(&good[8 + mlen..good.len() - 4]);
        let crc2 = crc32fast::hash(&bad2[4..]);
        bad2.extend_from_slice(&crc2.to_le_bytes());
        std::fs::write(&path, &bad2).unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::VersionMismatch(9))));
    }
}
