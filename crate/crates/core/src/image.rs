//! Grayscale images with values in `[0, 1]`, the unit the objectives and
//! the weight networks operate on.

use crate::error::{Error, Result};
use crate::grid::GridSize;

/// A single grayscale image over a validated even-sized grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    size: GridSize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(size: GridSize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size.pixel_count() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", size.pixel_count()),
                got: format!("{}", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidInput(
                "pixel values must be finite and in [0, 1]".into(),
            ));
        }
        Ok(Self { size, data })
    }

    /// Builds from 8-bit samples, mapping `[0, 255]` to `[0, 1]`.
    pub fn from_bytes(size: GridSize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != size.pixel_count() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", size.pixel_count()),
                got: format!("{}", bytes.len()),
            });
        }
        Ok(Self {
            size,
            data: bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        })
    }

    pub fn constant(size: GridSize, value: f64) -> Result<Self> {
        Self::new(size, vec![value; size.pixel_count()])
    }

    pub fn size(&self) -> GridSize {
        self.size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size.width() + col]
    }

    /// Quantizes to 8-bit samples (round-half-up on the 255 scale).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Converts interleaved RGB samples in `[0, 1]` to luminance (Rec. 601).
pub fn rgb_to_luminance(rgb: &[f64]) -> Vec<f64> {
    rgb.chunks_exact(3)
        .map(|px| (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]).clamp(0.0, 1.0))
        .collect()
}

/// A set of same-sized grayscale images: the unit over which batch-mean
/// weights are formed.
#[derive(Clone, Debug, Default)]
pub struct ImageBatch {
    images: Vec<GrayImage>,
    labels: Option<Vec<u8>>,
}

impl ImageBatch {
    pub fn new(images: Vec<GrayImage>) -> Result<Self> {
        Self::check_sizes(&images)?;
        Ok(Self {
            images,
            labels: None,
        })
    }

    pub fn with_labels(images: Vec<GrayImage>, labels: Vec<u8>) -> Result<Self> {
        Self::check_sizes(&images)?;
        if labels.len() != images.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", images.len()),
                got: format!("{}", labels.len()),
            });
        }
        Ok(Self {
            images,
            labels: Some(labels),
        })
    }

    fn check_sizes(images: &[GrayImage]) -> Result<()> {
        if let Some(first) = images.first() {
            let size = first.size();
            if images.iter().any(|im| im.size() != size) {
                return Err(Error::InvalidInput(
                    "all images in a batch must share one size".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn size(&self) -> Option<GridSize> {
        self.images.first().map(|im| im.size())
    }

    /// Keeps only images whose label matches.
    pub fn filter_by_label(&self, label: u8) -> Result<ImageBatch> {
        let labels = self.labels.as_ref().ok_or(Error::InvalidInput(
            "batch carries no labels to filter by".into(),
        ))?;
        let images = self
            .images
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == label)
            .map(|(im, _)| im.clone())
            .collect();
        Ok(ImageBatch {
            images,
            labels: None,
        })
    }
}
