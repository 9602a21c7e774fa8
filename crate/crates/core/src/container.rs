//! `NELW` tensor container, shared by generator weights and PSD dumps.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NELW"
//! 4       1     version (1)
//! 5       4     manifest length L in bytes (u32)
//! 9       L     UTF-8 JSON manifest
//! 9+L     ...   tensor blob, f32 little-endian
//! ```
//!
//! The manifest is `{"arch_id": str, "tensors": [{"name": str, "shape":
//! [int], "offset": int}]}` where `offset` counts f32 elements from the start
//! of the blob. The blob must end exactly after the last tensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NELW";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub arch_id: String,
    pub tensors: Vec<TensorEntry>,
}

/// A parsed container: manifest plus the flat f32 blob.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub manifest: Manifest,
    pub blob: Vec<f32>,
}

impl TensorFile {
    /// Packs named tensors contiguously in the given order.
    pub fn pack<'a>(
        arch_id: &str,
        tensors: impl IntoIterator<Item = (&'a str, Vec<usize>, &'a [f32])>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        let mut blob = Vec::new();
        for (name, shape, data) in tensors {
            let numel: usize = shape.iter().product();
            if numel != data.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: shape {shape:?} holds {numel} values, got {}",
                    data.len()
                )));
            }
            entries.push(TensorEntry {
                name: name.to_string(),
                shape,
                offset: blob.len(),
            });
            blob.extend_from_slice(data);
        }
        Ok(Self {
            manifest: Manifest {
                arch_id: arch_id.to_string(),
                tensors: entries,
            },
            blob,
        })
    }

    pub fn tensor(&self, name: &str) -> Option<(&TensorEntry, &[f32])> {
        let e = self.manifest.tensors.iter().find(|t| t.name == name)?;
        Some((e, &self.blob[e.offset..e.offset + e.numel()]))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(HEADER_LEN + manifest.len() + 4 * self.blob.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        for v in &self.blob {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (manifest, raw) = parse_manifest(bytes)?;
        Self::from_parts(manifest, raw)
    }

    /// Decodes the blob behind an already-parsed manifest, checking that it
    /// holds every tensor and nothing more.
    pub fn from_parts(manifest: Manifest, raw: &[u8]) -> Result<Self> {
        let expected = manifest
            .tensors
            .iter()
            .map(|t| t.offset + t.numel())
            .max()
            .unwrap_or(0);
        if raw.len() < expected * 4 || raw.len() % 4 != 0 {
            return Err(Error::TruncatedBlob {
                expected: expected * 4,
                got: raw.len(),
            });
        }
        if raw.len() != expected * 4 {
            return Err(Error::BadManifest(format!(
                "{} trailing bytes after the last tensor",
                raw.len() - expected * 4
            )));
        }
        let blob = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { manifest, blob })
    }
}

/// Splits a container into its manifest and the undecoded blob bytes.
pub fn parse_manifest(bytes: &[u8]) -> Result<(Manifest, &[u8])> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedBlob {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(Error::BadVersion(bytes[4]));
    }
    let mlen = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() < mlen {
        return Err(Error::TruncatedBlob {
            expected: HEADER_LEN + mlen,
            got: bytes.len(),
        });
    }
    let manifest: Manifest =
        serde_json::from_slice(&body[..mlen]).map_err(|e| Error::BadManifest(e.to_string()))?;
    Ok((manifest, &body[mlen..]))
}
