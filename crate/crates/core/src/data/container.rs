//! Canonical binary container.
//!
//! ```text
//! "GLMD" | version: u32 | n: u64 | d: u64 | k: u64 | flag: u8
//! k × (len: u64, utf-8 class name)
//! flag 0 (dense):  n × (label: u64, d × f64)
//! flag 1 (sparse): n × (label: u64, nnz: u64, nnz × (index: u64, value: f64))
//! trailer:         len: u64, JSON {split, provenance}
//! flag 2 (model):  len: u64, JSON payload
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CsrMatrix, Dataset, FeatureMatrix, Provenance, Split};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"GLMD";
pub const CONTAINER_VERSION: u32 = 1;

const FLAG_DENSE: u8 = 0;
const FLAG_SPARSE: u8 = 1;
const FLAG_MODEL: u8 = 2;

#[derive(Serialize, Deserialize)]
struct Trailer {
    split: Split,
    provenance: Provenance,
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_header(out: &mut Vec<u8>, n: usize, d: usize, k: usize, flag: u8) {
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    put_u64(out, n as u64);
    put_u64(out, d as u64);
    put_u64(out, k as u64);
    out.push(flag);
}

fn put_blob(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u64(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let flag = match ds.features() {
        FeatureMatrix::Dense(_) => FLAG_DENSE,
        FeatureMatrix::Sparse(_) => FLAG_SPARSE,
    };
    put_header(&mut out, ds.n(), ds.d(), ds.k(), flag);
    for name in ds.class_names() {
        put_blob(&mut out, name.as_bytes());
    }
    for (i, &label) in ds.labels().iter().enumerate() {
        put_u64(&mut out, label as u64);
        match ds.features() {
            FeatureMatrix::Dense(x) => {
                for v in x.row(i) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            FeatureMatrix::Sparse(x) => {
                let (idx, vals) = x.row(i);
                put_u64(&mut out, idx.len() as u64);
                for (&c, &v) in idx.iter().zip(vals) {
                    put_u64(&mut out, c as u64);
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    let trailer = serde_json::to_vec(&Trailer {
        split: ds.split,
        provenance: ds.provenance.clone(),
    })?;
    put_blob(&mut out, &trailer);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.at..end];
                self.at = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                path: self.path.to_path_buf(),
                expected: self.at.saturating_add(len),
                found: self.bytes.len(),
            }),
        }
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Format(format!("length {v} does not fit in memory")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn blob(&mut self) -> Result<&'a [u8]> {
        let len = self.usize()?;
        self.take(len)
    }

    fn header(&mut self) -> Result<(usize, usize, usize, u8)> {
        let magic = self.take(4)?;
        if magic != CONTAINER_MAGIC {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected: u32::from_be_bytes(*CONTAINER_MAGIC),
                found: u32::from_be_bytes(magic.try_into().expect("4 bytes")),
            });
        }
        let version = u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes"));
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported container version {version}",
                self.path.display()
            )));
        }
        let (n, d, k) = (self.usize()?, self.usize()?, self.usize()?);
        let flag = self.take(1)?[0];
        Ok((n, d, k, flag))
    }

    fn finish(&self) -> Result<()> {
        if self.at != self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.path.display(),
                self.bytes.len() - self.at
            )));
        }
        Ok(())
    }
}

pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let mut c = Cursor { bytes, at: 0, path };
    let (n, d, k, flag) = c.header()?;
    if flag != FLAG_DENSE && flag != FLAG_SPARSE {
        return Err(Error::Format(format!("{}: not a dataset container (flag {flag})", path.display())));
    }
    let mut names = Vec::with_capacity(k.min(1 << 16));
    for _ in 0..k {
        let raw = c.blob()?;
        names.push(
            String::from_utf8(raw.to_vec())
                .map_err(|_| Error::Format(format!("{}: class name is not UTF-8", path.display())))?,
        );
    }
    let mut labels = Vec::with_capacity(n.min(1 << 24));
    let features = if flag == FLAG_DENSE {
        let mut values = Vec::with_capacity(n.saturating_mul(d).min(1 << 28));
        for _ in 0..n {
            labels.push(c.usize()?);
            for _ in 0..d {
                values.push(c.f64()?);
            }
        }
        FeatureMatrix::Dense(Array2::from_shape_vec((n, d), values).map_err(|e| Error::Format(e.to_string()))?)
    } else {
        let mut rows = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            labels.push(c.usize()?);
            let nnz = c.usize()?;
            let mut row = Vec::with_capacity(nnz.min(d));
            for _ in 0..nnz {
                row.push((c.usize()?, c.f64()?));
            }
            rows.push(row);
        }
        FeatureMatrix::Sparse(CsrMatrix::from_rows(d, &rows)?)
    };
    let trailer: Trailer = serde_json::from_slice(c.blob()?)?;
    c.finish()?;
    let mut ds = Dataset::new(features, labels, names)?.with_split(trailer.split);
    ds.provenance = trailer.provenance;
    Ok(ds)
}

pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(ds)?).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, path)
}

/// Writes a model: the container header (with `n = 0`) and a JSON payload.
pub fn write_model_container<T: Serialize>(path: impl AsRef<Path>, d: usize, k: usize, payload: &T) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    put_header(&mut out, 0, d, k, FLAG_MODEL);
    put_blob(&mut out, &serde_json::to_vec(payload)?);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a model container, returning `(d, k, payload)`.
pub fn read_model_container<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<(usize, usize, T)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        at: 0,
        path,
    };
    let (_, d, k, flag) = c.header()?;
    if flag != FLAG_MODEL {
        return Err(Error::Format(format!("{}: not a model container (flag {flag})", path.display())));
    }
    let payload = serde_json::from_slice(c.blob()?)?;
    c.finish()?;
    Ok((d, k, payload))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dense() -> Dataset {
        let mut ds = Dataset::new(
            FeatureMatrix::Dense(array![[0.5, -1.0], [1e-300, f64::MAX]]),
            vec![1, 0],
            vec!["neg".into(), "pos".into()],
        )
        .unwrap()
        .with_split(Split::Test)
        .with_source("fixture");
        ds.provenance.transforms.push("none".into());
        ds
    }

    #[test]
    fn dense_round_trip() {
        let ds = dense();
        let bytes = encode_dataset(&ds).unwrap();
        assert_eq!(&bytes[..4], b"GLMD");
        assert_eq!(decode_dataset(&bytes, Path::new("mem")).unwrap(), ds);
    }

    #[test]
    fn sparse_round_trip() {
        let x = CsrMatrix::from_rows(5, &[vec![(1, 2.0)], vec![], vec![(0, 1.0), (4, -3.0)]]).unwrap();
        let ds = Dataset::new(FeatureMatrix::Sparse(x), vec![0, 1, 1], vec!["a".into(), "b".into()]).unwrap();
        let bytes = encode_dataset(&ds).unwrap();
        assert_eq!(decode_dataset(&bytes, Path::new("mem")).unwrap(), ds);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = encode_dataset(&dense()).unwrap();
        let p = Path::new("mem");
        assert!(matches!(decode_dataset(&bytes[..bytes.len() - 3], p), Err(Error::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_dataset(&bad, p), Err(Error::BadMagic { .. })));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_dataset(&extra, p).is_err());
    }

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.glmd");
        write_model_container(&path, 3, 2, &vec![1.5, 2.5]).unwrap();
        let (d, k, v): (usize, usize, Vec<f64>) = read_model_container(&path).unwrap();
        assert_eq!((d, k, v), (3, 2, vec![1.5, 2.5]));
        let ds_path = dir.path().join("d.glmd");
        write_dataset(&ds_path, &dense()).unwrap();
        assert!(read_model_container::<Vec<f64>>(&ds_path).is_err());
        assert!(read_dataset(&path).is_err());
    }
}
