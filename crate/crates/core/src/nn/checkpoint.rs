//! Binary checkpoint container shared by every model type.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! "TGPD" version count
//! { name_len name_utf8 rank dim* payload_f32* } * count
//! word_count { word_len word_utf8 } * word_count
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::{ParamStore, Real, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TGPD";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes, not a checkpoint")]
    BadMagic,
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated payload while reading {0}")]
    Truncated(&'static str),
    #[error("invalid utf-8 in {0}")]
    Utf8(&'static str),
    #[error("{0} trailing bytes after vocabulary block")]
    TrailingBytes(usize),
    #[error("invalid array {name}: {reason}")]
    BadArray { name: String, reason: String },
    #[error("architecture mismatch: missing arrays [{missing}]{}", extra(.unexpected))]
    Architecture { missing: String, unexpected: String },
    #[error("shape mismatch for {name}: checkpoint {found:?}, model {expected:?}")]
    Shape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
}

fn extra(unexpected: &str) -> String {
    if unexpected.is_empty() {
        String::new()
    } else {
        format!(", unexpected arrays [{unexpected}]")
    }
}

/// Named arrays plus the vocabulary they were trained against.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub arrays: Vec<(String, Tensor<f32>)>,
    pub vocab: Vec<String>,
}

impl Checkpoint {
    pub fn from_params<T: Real>(store: &ParamStore<T>, vocab: &[String]) -> Self {
        Self {
            arrays: store
                .iter()
                .map(|(_, p)| (p.name.clone(), p.value.cast()))
                .collect(),
            vocab: vocab.to_vec(),
        }
    }

    pub fn array(&self, name: &str) -> Option<&Tensor<f32>> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.iter().map(|(n, _)| n.as_str())
    }

    /// Copy every array into a store of identical architecture.
    pub fn load_into<T: Real>(&self, store: &mut ParamStore<T>) -> Result<(), CheckpointError> {
        let mut missing = Vec::new();
        for (_, p) in store.iter() {
            if self.array(&p.name).is_none() {
                missing.push(p.name.clone());
            }
        }
        let unexpected: Vec<String> = self
            .names()
            .filter(|n| store.id(n).is_none())
            .map(str::to_owned)
            .collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(CheckpointError::Architecture {
                missing: missing.join(", "),
                unexpected: unexpected.join(", "),
            });
        }
        for (name, t) in &self.arrays {
            let id = store.id(name).expect("checked above");
            let p = store.get_mut(id);
            if p.value.shape() != t.shape() {
                return Err(CheckpointError::Shape {
                    name: name.clone(),
                    found: t.shape().to_vec(),
                    expected: p.value.shape().to_vec(),
                });
            }
            for (dst, &src) in p.value.data_mut().iter_mut().zip(t.data()) {
                *dst = T::from_f64(src as f64);
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        put_u32(&mut out, self.arrays.len() as u32);
        for (name, t) in &self.arrays {
            put_str(&mut out, name);
            put_u32(&mut out, t.shape().len() as u32);
            for &d in t.shape() {
                put_u32(&mut out, d as u32);
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        put_u32(&mut out, self.vocab.len() as u32);
        for w in &self.vocab {
            put_str(&mut out, w);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader::new(bytes);
        if r.take(4, "magic")? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let count = r.u32("array count")? as usize;
        let mut arrays = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = r.string("array name")?;
            let rank = r.u32("rank")? as usize;
            if rank == 0 || rank > 2 {
                return Err(CheckpointError::BadArray {
                    name,
                    reason: format!("rank {rank}"),
                });
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("dimension")? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or(CheckpointError::Truncated("payload"))?, "payload")?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let t = Tensor::new(&shape, data).map_err(|e| CheckpointError::BadArray {
                name: name.clone(),
                reason: e.to_string(),
            })?;
            arrays.push((name, t));
        }
        let words = r.u32("word count")? as usize;
        let mut vocab = Vec::with_capacity(words.min(1 << 16));
        for _ in 0..words {
            vocab.push(r.string("vocabulary word")?);
        }
        if r.remaining() != 0 {
            return Err(CheckpointError::TrailingBytes(r.remaining()));
        }
        Ok(Self { arrays, vocab })
    }

    /// Write via a temporary sibling file and rename.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

/// Bounds-checked little-endian cursor.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        if self.remaining() < n {
            return Err(CheckpointError::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn string(&mut self, what: &'static str) -> Result<String, CheckpointError> {
        let n = self.u32(what)? as usize;
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec()).map_err(|_| CheckpointError::Utf8(what))
    }
}
