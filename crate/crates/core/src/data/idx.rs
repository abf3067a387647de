// IDX binary format: 4-byte big-endian magic (0x00000803 for images,
// 0x00000801 for labels), big-endian u32 dimension sizes, then unsigned
// bytes in row-major order.

use super::Dataset;
use crate::error::{Error, Result};
use std::path::Path;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

fn parse<'a>(bytes: &'a [u8], magic: u32, what: &str) -> Result<(Vec<usize>, &'a [u8])> {
    let found = read_u32(bytes, 0, what)?;
    if found != magic {
        return Err(Error::Format(format!(
            "{what}: magic 0x{found:08x}, expected 0x{magic:08x}"
        )));
    }
    let ndims = (magic & 0xff) as usize;
    let dims = (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k, what).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let payload = &bytes[4 + 4 * ndims..];
    let expected: usize = dims.iter().product();
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "{what}: truncated payload ({} of {expected} bytes)",
            payload.len()
        )));
    }
    Ok((dims, &payload[..expected]))
}

/// Parses an IDX image file into `(count, pixels per image, raw bytes)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let (dims, payload) = parse(bytes, IMAGES_MAGIC, "images")?;
    Ok((dims[0], dims[1] * dims[2], payload.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, payload) = parse(bytes, LABELS_MAGIC, "labels")?;
    Ok(payload.to_vec())
}

/// Loads an IDX image/label pair, scaling pixels to `[0, 1]`.
/// The class count is one more than the largest label seen (at least 2).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    let (count, dim, pixels) = parse_idx_images(&images)?;
    let labels = parse_idx_labels(&labels)?;
    if labels.len() != count {
        return Err(Error::Format(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    if dim == 0 {
        return Err(Error::Format("images have zero pixels".into()));
    }
    let features = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let num_classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
    Dataset::new(features, dim, labels, num_classes)
}
