//! IDX container (MNIST): big-endian magic, big-endian u32 dimensions, then
//! one unsigned byte per element. Gzip-compressed files are accepted.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::{Dataset, FeatureMatrix, Split};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

const MNIST_CLASSES: usize = 10;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: at + 4,
            found: bytes.len(),
        })
}

/// Parses an image file into `n × (rows·cols)` pixels scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let d = rows * cols;
    let expected = 16 + n * d;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    let pixels = &bytes[16..expected];
    Ok(Array2::from_shape_fn((n, d), |(i, j)| f64::from(pixels[i * d + j]) / 255.0))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let expected = 8 + n;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    let labels: Vec<usize> = bytes[8..expected].iter().map(|&b| b as usize).collect();
    if let Some(&bad) = labels.iter().find(|&&c| c >= MNIST_CLASSES) {
        return Err(Error::Format(format!("{}: label {bad} outside 0..9", path.display())));
    }
    Ok(labels)
}

/// Loads an image/label file pair as a dense dataset with ten classes.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let x = parse_idx_images(&read_bytes(ip)?, ip)?;
    let y = parse_idx_labels(&read_bytes(lp)?, lp)?;
    if x.nrows() != y.len() {
        return Err(Error::CountMismatch {
            images: x.nrows(),
            labels: y.len(),
        });
    }
    let names = (0..MNIST_CLASSES).map(|c| c.to_string()).collect();
    Ok(Dataset::new(FeatureMatrix::Dense(x), y, names)?
        .with_split(Split::Unspecified)
        .with_source(format!("idx:{}+{}", ip.display(), lp.display())))
}
