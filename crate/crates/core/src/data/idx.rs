//! IDX reader/writer. Headers are big-endian: a magic word (`0x0000_08NN`,
//! unsigned bytes, `NN` dimensions) followed by one `u32` per dimension.
//! Gzip-compressed files are detected by their magic bytes.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{DataError, Dataset, Labeling};
use crate::nn::Tensor;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_bytes(path: &Path) -> Result<Vec<u8>, DataError> {
    let raw = fs::read(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Parses an IDX buffer with the expected magic, returning dims and payload.
pub fn parse_idx<'a>(bytes: &'a [u8], expected_magic: u32, what: &str) -> Result<(Vec<usize>, &'a [u8]), DataError> {
    let header = |offset: usize| -> Result<u32, DataError> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or(DataError::Truncated { what: what.into(), expected: offset + 4, found: bytes.len() })
    };
    let magic = header(0)?;
    if magic != expected_magic {
        return Err(DataError::BadMagic { what: what.into(), expected: expected_magic, found: magic });
    }
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank).map(|i| header(4 + 4 * i).map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
    let start = 4 + 4 * rank;
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DataError::InvalidArgument(format!("{what}: dimensions {dims:?} overflow")))?;
    let payload = &bytes[start..];
    if payload.len() < len {
        return Err(DataError::Truncated { what: what.into(), expected: start + len, found: bytes.len() });
    }
    if payload.len() > len {
        return Err(DataError::TrailingBytes { what: what.into(), extra: payload.len() - len });
    }
    Ok((dims, payload))
}

/// Decodes an image/label pair into a dataset of `(n, 1, rows, cols)` samples
/// scaled to `[0, 1]`. The class count is `max(label) + 1`.
pub fn decode_idx(images: &[u8], labels: &[u8]) -> Result<Dataset, DataError> {
    let (img_dims, pixels) = parse_idx(images, IMAGES_MAGIC, "images")?;
    let (lab_dims, label_bytes) = parse_idx(labels, LABELS_MAGIC, "labels")?;
    if img_dims[0] != lab_dims[0] {
        return Err(DataError::CountMismatch { samples: img_dims[0], labels: lab_dims[0] });
    }
    if img_dims.contains(&0) {
        return Err(DataError::Empty);
    }
    let labels: Vec<usize> = label_bytes.iter().map(|&b| usize::from(b)).collect();
    let num_classes = labels.iter().max().map_or(1, |m| m + 1);
    let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let samples = Tensor::new(vec![img_dims[0], 1, img_dims[1], img_dims[2]], data)?;
    Dataset::new(samples, labels, num_classes, Labeling::True)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let images = read_bytes(images_path.as_ref())?;
    let labels = read_bytes(labels_path.as_ref())?;
    decode_idx(&images, &labels)
}

/// Encodes `(n, rows, cols)` bytes as an IDX image file.
pub fn encode_idx_images(n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), n * rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for word in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes a dataset with `(1, rows, cols)` or `(rows, cols)` samples in `[0, 1]`
/// as an IDX pair, quantizing pixels to bytes. Gzips when a path ends in `.gz`.
pub fn save_idx(d: &Dataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<(), DataError> {
    let shape = d.sample_shape();
    let (rows, cols) = match shape {
        [1, r, c] | [r, c] => (*r, *c),
        _ => return Err(DataError::InvalidArgument(format!("cannot store samples of shape {shape:?} as images"))),
    };
    if d.num_classes() > 256 {
        return Err(DataError::InvalidArgument("IDX labels are single bytes".into()));
    }
    let pixels: Vec<u8> = d.samples().data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let labels: Vec<u8> = d.labels().iter().map(|&l| l as u8).collect();
    write_maybe_gz(images_path.as_ref(), &encode_idx_images(d.len(), rows, cols, &pixels))?;
    write_maybe_gz(labels_path.as_ref(), &encode_idx_labels(&labels))
}

fn write_maybe_gz(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let io = |source| DataError::Io { path: path.display().to_string(), source };
    if path.extension().is_some_and(|e| e == "gz") {
        use std::io::Write;
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(bytes).map_err(io)?;
        fs::write(path, enc.finish().map_err(io)?).map_err(io)
    } else {
        fs::write(path, bytes).map_err(io)
    }
}
