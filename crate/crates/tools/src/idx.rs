//! IDX file parsing: big-endian dimension headers, magic 0x00000803 for
//! u8 image tensors and 0x00000801 for u8 label vectors.

use std::fs;
use std::path::Path;

use sfc_core::{GrayImage, GridSize, ImageBatch};

use crate::error::{Result, ToolError};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(path: &Path, bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset,
            what: "truncated header".into(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Raw decoded image tensor: `count` images of `rows x cols` u8 samples.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
    pub count: usize,
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(ToolError::io(path))?;
    let magic = be_u32(path, &bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(ToolError::BadMagic {
            path: path.to_owned(),
            got: magic,
            expected: IMAGES_MAGIC,
        });
    }
    let count = be_u32(path, &bytes, 4)? as usize;
    let rows = be_u32(path, &bytes, 8)? as usize;
    let cols = be_u32(path, &bytes, 12)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: bytes.len(),
            what: format!("truncated payload: need {expected} bytes"),
        });
    }
    Ok(IdxImages {
        rows,
        cols,
        data: bytes[16..expected].to_vec(),
        count,
    })
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(ToolError::io(path))?;
    let magic = be_u32(path, &bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(ToolError::BadMagic {
            path: path.to_owned(),
            got: magic,
            expected: LABELS_MAGIC,
        });
    }
    let count = be_u32(path, &bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: bytes.len(),
            what: format!("truncated payload: need {expected} bytes"),
        });
    }
    Ok(bytes[8..expected].to_vec())
}

/// Writers for the same layout, used by round-trip tests and exporters.
pub fn write_idx_images(path: impl AsRef<Path>, images: &IdxImages) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(16 + images.data.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.count as u32).to_be_bytes());
    out.extend_from_slice(&(images.rows as u32).to_be_bytes());
    out.extend_from_slice(&(images.cols as u32).to_be_bytes());
    out.extend_from_slice(&images.data);
    fs::write(path, out).map_err(ToolError::io(path))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(ToolError::io(path))
}

/// Loads an image file (and optionally an aligned label file) into a batch
/// of `[0, 1]` grayscale images. Odd-sized sources (like raw 28x28 MNIST)
/// must go through [`crate::dataset::pad_images`] instead.
pub fn load_batch(
    images_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<ImageBatch> {
    let (idx, labels) = load_raw(images_path, labels_path)?;
    let size = GridSize::with_max_pixels(idx.rows, idx.cols, usize::MAX).map_err(|_| {
        ToolError::Data(format!(
            "source images are {}x{}; use --pad to reach an even size",
            idx.rows, idx.cols
        ))
    })?;
    let per = idx.rows * idx.cols;
    let images: Vec<GrayImage> = (0..idx.count)
        .map(|i| GrayImage::from_bytes(size, &idx.data[i * per..(i + 1) * per]))
        .collect::<sfc_core::Result<_>>()?;
    match labels {
        Some(labels) => Ok(ImageBatch::with_labels(images, labels)?),
        None => Ok(ImageBatch::new(images)?),
    }
}

/// Loads raw u8 images with labels without any size validation; callers pad
/// to an even target before constructing curve-ready batches.
pub fn load_raw(
    images_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<(IdxImages, Option<Vec<u8>>)> {
    let idx = load_idx_images(&images_path)?;
    let labels = match labels_path {
        Some(lp) => {
            let labels = load_idx_labels(lp)?;
            if labels.len() != idx.count {
                return Err(ToolError::Data(format!(
                    "{} images but {} labels",
                    idx.count,
                    labels.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    Ok((idx, labels))
}
