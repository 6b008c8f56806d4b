//! Versioned parameter container.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "SARVCKPT"
//! version    u32       1
//! width      u8        4 (f32) or 8 (f64)
//! meta_len   u32       length of the UTF-8 metadata block
//! meta       bytes     opaque metadata (the model spec, as JSON)
//! count      u32       number of tensors
//! per tensor:
//!   name_len u32, name bytes (UTF-8)
//!   rank     u32, dims u64 × rank
//!   values   width bytes × Π dims, row-major
//! ```
//!
//! A plain-text manifest is written next to the binary (`<file>.manifest`)
//! listing precision, the SHA-256 of the binary and every tensor shape.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::real::{Precision, Real};
use crate::nn::tensor::Parameter;

const MAGIC: &[u8; 8] = b"SARVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub precision: Precision,
    pub metadata: String,
    pub tensors: Vec<StoredTensor>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

pub fn encode<F: Real>(metadata: &str, params: &[&Parameter<F>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(F::PRECISION.byte_width() as u8);
    out.extend_from_slice(&(metadata.len() as u32).to_le_bytes());
    out.extend_from_slice(metadata.as_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.shape().len() as u32).to_le_bytes());
        for &d in p.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in p.value.as_slice() {
            v.write_le(&mut out);
        }
    }
    out
}

fn manifest_text(precision: Precision, hash: &str, tensors: &[(String, Vec<usize>)]) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "format sarv-checkpoint v{CHECKPOINT_VERSION}");
    let _ = writeln!(m, "precision {}", match precision {
        Precision::Single => "single",
        Precision::Double => "double",
    });
    let _ = writeln!(m, "sha256 {hash}");
    for (name, shape) in tensors {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(m, "tensor {name} {}", dims.join("x"));
    }
    m
}

/// Writes the binary and its manifest; returns the content hash.
pub fn save<F: Real>(path: &Path, metadata: &str, params: &[&Parameter<F>]) -> Result<String> {
    let bytes = encode(metadata, params);
    let hash = sha256_hex(&bytes);
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let shapes: Vec<(String, Vec<usize>)> =
        params.iter().map(|p| (p.name.clone(), p.shape().to_vec())).collect();
    let manifest = manifest_path(path);
    fs::write(&manifest, manifest_text(F::PRECISION, &hash, &shapes))
        .map_err(|e| Error::io(&manifest, e))?;
    Ok(hash)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint {
                path: self.path.to_path_buf(),
                reason: format!("truncated at byte {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self, len: usize) -> Result<String> {
        let path = self.path;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: "non UTF-8 string".into(),
        })
    }
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<Checkpoint> {
    let bad = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(8)? != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let precision = match r.take(1)?[0] {
        4 => Precision::Single,
        8 => Precision::Double,
        w => return Err(bad(format!("unsupported float width {w}"))),
    };
    let meta_len = r.u32()? as usize;
    let metadata = r.string(meta_len)?;
    let count = r.u32()? as usize;
    let width = precision.byte_width();
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = r.string(name_len)?;
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n * width)?;
        let values = raw
            .chunks_exact(width)
            .map(|c| match precision {
                Precision::Single => f32::read_le(c) as f64,
                Precision::Double => f64::read_le(c),
            })
            .collect();
        tensors.push(StoredTensor { name, shape, values });
    }
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Checkpoint {
        precision,
        metadata,
        tensors,
    })
}

/// Reads a checkpoint, verifying it against its manifest hash when the manifest exists.
pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let manifest = manifest_path(path);
    if let Ok(text) = fs::read_to_string(&manifest) {
        let expected = text
            .lines()
            .find_map(|l| l.strip_prefix("sha256 "))
            .map(str::trim)
            .unwrap_or_default();
        let found = sha256_hex(&bytes);
        if expected != found {
            return Err(Error::Checkpoint {
                path: path.to_path_buf(),
                reason: format!("hash mismatch: manifest {expected}, file {found}"),
            });
        }
    }
    decode(path, &bytes)
}

impl Checkpoint {
    /// Copies stored values into `params`, matching by position and name.
    /// Any disagreement is reported as one diff covering every tensor.
    pub fn restore_into<F: Real>(&self, params: &mut [&mut Parameter<F>]) -> Result<()> {
        let mut diff = String::new();
        if self.precision != F::PRECISION {
            let _ = writeln!(diff, "precision: expected {:?}, found {:?}", F::PRECISION, self.precision);
        }
        let n = params.len().max(self.tensors.len());
        for i in 0..n {
            match (params.get(i), self.tensors.get(i)) {
                (Some(p), Some(t)) if p.name == t.name && p.shape() == t.shape.as_slice() => {}
                (Some(p), Some(t)) => {
                    let _ = writeln!(diff, "- {} {:?}\n+ {} {:?}", p.name, p.shape(), t.name, t.shape);
                }
                (Some(p), None) => {
                    let _ = writeln!(diff, "- {} {:?}\n+ (missing)", p.name, p.shape());
                }
                (None, Some(t)) => {
                    let _ = writeln!(diff, "- (absent)\n+ {} {:?}", t.name, t.shape);
                }
                (None, None) => unreachable!(),
            }
        }
        if !diff.is_empty() {
            return Err(Error::CheckpointMismatch { diff });
        }
        for (p, t) in params.iter_mut().zip(&self.tensors) {
            for (dst, &src) in p.value.as_mut_slice().iter_mut().zip(&t.values) {
                *dst = F::from_f64_lossy(src);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor;

    fn param(name: &str, shape: &[usize], seed: f64) -> Parameter<f32> {
        let n = shape.iter().product();
        let vals = (0..n).map(|i| (i as f64 * seed).sin()).collect::<Vec<_>>();
        Parameter::new(name, Tensor::from_f64(shape, &vals).unwrap())
    }

    #[test]
    fn save_load_restore() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let a = param("a", &[2, 3], 0.3);
        let b = param("b", &[3], 0.7);
        let hash = save(&path, "{\"k\":1}", &[&a, &b]).unwrap();
        let manifest = fs::read_to_string(manifest_path(&path)).unwrap();
        assert!(manifest.contains(&hash));
        assert!(manifest.contains("tensor a 2x3"));

        let ck = load(&path).unwrap();
        assert_eq!(ck.metadata, "{\"k\":1}");
        let mut a2 = Parameter::<f32>::zeros("a", &[2, 3]);
        let mut b2 = Parameter::<f32>::zeros("b", &[3]);
        ck.restore_into(&mut [&mut a2, &mut b2]).unwrap();
        assert_eq!(a2.value, a.value);
        assert_eq!(b2.value, b.value);
    }

    #[test]
    fn mismatch_reports_diff() {
        let a = param("a", &[2, 3], 0.3);
        let bytes = encode("", &[&a]);
        let ck = decode(Path::new("mem"), &bytes).unwrap();
        let mut wrong = Parameter::<f32>::zeros("a", &[3, 2]);
        let err = ck.restore_into(&mut [&mut wrong]).unwrap_err().to_string();
        assert!(err.contains("[3, 2]") && err.contains("[2, 3]"), "{err}");

        let mut wide = Parameter::<f64>::zeros("a", &[2, 3]);
        assert!(ck.restore_into(&mut [&mut wide]).is_err());
    }

    #[test]
    fn tampered_file_fails_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save(&path, "", &[&param("a", &[4], 1.0)]).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::Checkpoint { .. })));
    }
}
