//! Dataset assembly: zero padding, class filtering and train/test splits
//! over IDX tensors or directories of P5 graymaps.

use std::path::{Path, PathBuf};

use sfc_core::{GrayImage, GridSize, ImageBatch};

use crate::error::{Result, ToolError};
use crate::idx;
use crate::pgm;

/// Where data comes from: a pair of IDX files or a directory of `.pgm`
/// graymaps (sorted by file name for determinism).
#[derive(Clone, Debug)]
pub enum DataSource {
    Idx {
        images: PathBuf,
        labels: Option<PathBuf>,
    },
    PgmDir(PathBuf),
}

/// Declarative dataset description resolved by [`load_dataset`].
#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub source: DataSource,
    /// Keep only this label (requires labels).
    pub class_filter: Option<u8>,
    /// Zero-pad to this square size (centered).
    pub pad_to: Option<usize>,
    /// Cap the number of images after filtering.
    pub limit: Option<usize>,
}

/// Centers each image in a zero canvas of `target` size. An equal margin
/// goes on each side; odd differences put the extra row/column at the
/// bottom/right (28 -> 32 gives a 2-pixel margin all around).
pub fn pad_bytes(
    data: &[u8],
    count: usize,
    rows: usize,
    cols: usize,
    target: GridSize,
) -> Result<Vec<GrayImage>> {
    let (th, tw) = (target.height(), target.width());
    if th < rows || tw < cols {
        return Err(ToolError::Data(format!(
            "pad target {th}x{tw} is smaller than source {rows}x{cols}"
        )));
    }
    let top = (th - rows) / 2;
    let left = (tw - cols) / 2;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let src = &data[i * rows * cols..(i + 1) * rows * cols];
        let mut canvas = vec![0u8; th * tw];
        for r in 0..rows {
            let dst = (top + r) * tw + left;
            canvas[dst..dst + cols].copy_from_slice(&src[r * cols..(r + 1) * cols]);
        }
        out.push(GrayImage::from_bytes(target, &canvas)?);
    }
    Ok(out)
}

/// Pads an already-loaded batch to a larger even size.
pub fn pad_images(batch: &ImageBatch, target: GridSize) -> Result<ImageBatch> {
    let Some(size) = batch.size() else {
        return Ok(ImageBatch::default());
    };
    if target == size {
        return Ok(batch.clone());
    }
    let bytes: Vec<u8> = batch.images().iter().flat_map(|im| im.to_bytes()).collect();
    let images = pad_bytes(
        &bytes,
        batch.len(),
        size.height(),
        size.width(),
        target,
    )?;
    match batch.labels() {
        Some(labels) => Ok(ImageBatch::with_labels(images, labels.to_vec())?),
        None => Ok(ImageBatch::new(images)?),
    }
}

fn load_pgm_dir(dir: &Path) -> Result<ImageBatch> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(ToolError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "pgm").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ToolError::Data(format!(
            "no .pgm files under {}",
            dir.display()
        )));
    }
    let images = paths
        .iter()
        .map(pgm::read_pgm)
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageBatch::new(images)?)
}

/// Resolves a dataset spec into a curve-ready batch.
pub fn load_dataset(spec: &DatasetSpec) -> Result<ImageBatch> {
    let mut batch = match &spec.source {
        DataSource::Idx { images, labels } => {
            let (idx, labels) = idx::load_raw(images, labels.as_deref())?;
            let target = match spec.pad_to {
                Some(t) => GridSize::with_max_pixels(t, t, usize::MAX)
                    .map_err(|e| ToolError::Data(format!("bad pad target: {e}")))?,
                None => GridSize::with_max_pixels(idx.rows, idx.cols, usize::MAX).map_err(|_| {
                    ToolError::Data(format!(
                        "source images are {}x{}; use --pad to reach an even size",
                        idx.rows, idx.cols
                    ))
                })?,
            };
            let images = pad_bytes(&idx.data, idx.count, idx.rows, idx.cols, target)?;
            match labels {
                Some(l) => ImageBatch::with_labels(images, l)?,
                None => ImageBatch::new(images)?,
            }
        }
        DataSource::PgmDir(dir) => {
            let batch = load_pgm_dir(dir)?;
            match spec.pad_to {
                Some(t) => {
                    let target = GridSize::with_max_pixels(t, t, usize::MAX)
                        .map_err(|e| ToolError::Data(format!("bad pad target: {e}")))?;
                    pad_images(&batch, target)?
                }
                None => batch,
            }
        }
    };

    if let Some(class) = spec.class_filter {
        batch = batch.filter_by_label(class)?;
        if batch.is_empty() {
            return Err(ToolError::Data(format!("no images with label {class}")));
        }
    }
    if let Some(limit) = spec.limit {
        let images = batch.images()[..limit.min(batch.len())].to_vec();
        batch = ImageBatch::new(images)?;
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_centers_mnist_geometry() {
        // 28 -> 32 puts 2 zero rows/cols on each side.
        let data = vec![200u8; 28 * 28];
        let target = GridSize::new(32, 32).unwrap();
        let padded = pad_bytes(&data, 1, 28, 28, target).unwrap();
        let im = &padded[0];
        assert_eq!(im.get(0, 0), 0.0);
        assert_eq!(im.get(1, 31), 0.0);
        assert_eq!(im.get(2, 2), 200.0 / 255.0);
        assert_eq!(im.get(29, 29), 200.0 / 255.0);
        assert_eq!(im.get(30, 30), 0.0);
    }

    #[test]
    fn equal_size_padding_is_identity() {
        let size = GridSize::new(4, 4).unwrap();
        let batch = ImageBatch::new(vec![GrayImage::constant(size, 0.5).unwrap()]).unwrap();
        let same = pad_images(&batch, size).unwrap();
        assert_eq!(same.images()[0], batch.images()[0]);
    }

    #[test]
    fn pad_rejects_shrinking() {
        let size = GridSize::new(4, 4).unwrap();
        let batch = ImageBatch::new(vec![GrayImage::constant(size, 0.5).unwrap()]).unwrap();
        let small = GridSize::new(2, 2).unwrap();
        assert!(pad_images(&batch, small).is_err());
    }
}
