//! Binary tensor container used for checkpoints and preprocessed caches.
//!
//! Layout:
//!
//! ```text
//! magic       8 bytes   "SPKCLOUD"
//! version     u32 LE
//! header_len  u64 LE
//! header      header_len bytes of JSON
//! payload     f32 LE values
//! ```
//!
//! The JSON header carries a `kind` string, free-form `meta` and a tensor
//! manifest of `{name, shape, offset}` entries, where `offset` is a byte
//! offset into the payload.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CheckpointError, Error, Result};

pub const MAGIC: [u8; 8] = *b"SPKCLOUD";
pub const VERSION: u32 = 1;
const PREAMBLE: usize = 8 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ManifestEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    version: u32,
    meta: Value,
    tensors: Vec<ManifestEntry>,
}

/// A named tensor in the container.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    pub tensors: Vec<NamedTensor>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: Value) -> Self {
        Container {
            kind: kind.into(),
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.tensors.push(NamedTensor {
            name: name.into(),
            shape,
            data,
        });
    }

    pub fn get(&self, name: &str) -> Result<&NamedTensor, CheckpointError> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| CheckpointError::MissingTensor { name: name.into() })
    }

    /// Data of `name`, checked against the expected shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<&[f32], CheckpointError> {
        let t = self.get(name)?;
        if t.shape != shape {
            return Err(CheckpointError::ShapeMismatch {
                name: name.into(),
                manifest: t.shape.clone(),
                expected: shape.to_vec(),
            });
        }
        Ok(&t.data)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let tensors = self
            .tensors
            .iter()
            .map(|t| {
                let e = ManifestEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    offset,
                };
                offset += 4 * t.data.len();
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header {
            kind: self.kind.clone(),
            version: VERSION,
            meta: self.meta.clone(),
            tensors,
        })?;
        let mut out = Vec::with_capacity(PREAMBLE + header.len() + offset);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |needed| CheckpointError::Truncated {
            needed,
            available: bytes.len(),
        };
        if bytes.len() < 8 || bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic {
                expected: MAGIC,
                found: bytes[..bytes.len().min(8)].to_vec(),
            }
            .into());
        }
        if bytes.len() < PREAMBLE {
            return Err(truncated(PREAMBLE).into());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::Version {
                found: version,
                supported: VERSION,
            }
            .into());
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let payload_start = PREAMBLE.checked_add(header_len).ok_or_else(|| truncated(usize::MAX))?;
        if bytes.len() < payload_start {
            return Err(truncated(payload_start).into());
        }
        let header: Header = serde_json::from_slice(&bytes[PREAMBLE..payload_start])?;
        let payload = &bytes[payload_start..];
        let mut spans: Vec<(usize, usize, &str)> = Vec::new();
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in &header.tensors {
            let len = 4 * e.numel();
            match e.offset.checked_add(len).filter(|_| e.offset % 4 == 0) {
                Some(end) if end <= payload.len() => {}
                Some(end) if e.offset <= payload.len() => return Err(truncated(payload_start + end).into()),
                _ => {
                    return Err(CheckpointError::BadExtent {
                        name: e.name.clone(),
                        offset: e.offset,
                        len,
                        payload: payload.len(),
                    }
                    .into())
                }
            }
            spans.push((e.offset, e.offset + len, &e.name));
            let data = payload[e.offset..e.offset + len]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor {
                name: e.name.clone(),
                shape: e.shape.clone(),
                data,
            });
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(CheckpointError::BadExtent {
                    name: w[1].2.to_string(),
                    offset: w[1].0,
                    len: w[1].1 - w[1].0,
                    payload: payload.len(),
                }
                .into());
            }
        }
        Ok(Container {
            kind: header.kind,
            meta: header.meta,
            tensors,
        })
    }

    /// Fails unless the container is of the given kind.
    pub fn expect_kind(&self, kind: &str) -> Result<(), CheckpointError> {
        if self.kind != kind {
            return Err(CheckpointError::Kind {
                expected: kind.into(),
                found: self.kind.clone(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut c = Container::new("test", serde_json::json!({"epoch": 3}));
        c.push("a", vec![2, 3], vec![1.0, -2.0, 3.5, f32::MIN_POSITIVE, 0.0, -0.0]);
        c.push("b", vec![1], vec![7.25]);
        c
    }

    #[test]
    fn round_trip_is_bitwise() {
        let c = sample();
        let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back.kind, "test");
        assert_eq!(back.meta["epoch"], 3);
        for (x, y) in c.tensors.iter().zip(&back.tensors) {
            let bx: Vec<u32> = x.data.iter().map(|v| v.to_bits()).collect();
            let by: Vec<u32> = y.data.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bx, by);
        }
    }

    #[test]
    fn corrupt_magic_and_version() {
        let mut b = sample().to_bytes().unwrap();
        b[0] = b'X';
        assert!(matches!(
            Container::from_bytes(&b),
            Err(Error::Checkpoint(CheckpointError::BadMagic { .. }))
        ));
        let mut b = sample().to_bytes().unwrap();
        b[8] = 9;
        assert!(matches!(
            Container::from_bytes(&b),
            Err(Error::Checkpoint(CheckpointError::Version { found: 9, .. }))
        ));
    }

    #[test]
    fn truncation_is_reported() {
        let b = sample().to_bytes().unwrap();
        for cut in [4, 15, 30, b.len() - 1] {
            let err = Container::from_bytes(&b[..cut]).unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::Checkpoint(CheckpointError::Truncated { .. } | CheckpointError::BadMagic { .. })
                ),
                "{cut}: {err}"
            );
        }
    }

    #[test]
    fn shape_check_names_tensor() {
        let c = sample();
        match c.expect("a", &[3, 2]) {
            Err(CheckpointError::ShapeMismatch { name, .. }) => assert_eq!(name, "a"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.expect("zz", &[1]), Err(CheckpointError::MissingTensor { .. })));
    }
}
