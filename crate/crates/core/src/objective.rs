//! Scan-order objectives: flatten an image along an order, then score the
//! 1D sequence by lag-k autocorrelation or LZW code length.

use crate::cover::SfcOrder;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::lzw;

/// An image flattened along an order; values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelSequence {
    values: Vec<f64>,
}

impl PixelSequence {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 8-bit quantization used by the LZW objective.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Which score to optimize. `NegAutocorrelation` is `-rho_k`; `LzwLength`
/// is the encoded byte count of the quantized sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    NegAutocorrelation { lag: usize },
    LzwLength,
}

impl ObjectiveKind {
    pub fn name(&self) -> String {
        match self {
            ObjectiveKind::NegAutocorrelation { lag } => format!("ac{lag}"),
            ObjectiveKind::LzwLength => "lzw".to_string(),
        }
    }
}

/// values[t] = image at order[t].
pub fn flatten(image: &GrayImage, order: &SfcOrder) -> Result<PixelSequence> {
    if image.size() != order.size() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", order.size().height(), order.size().width()),
            got: format!("{}x{}", image.size().height(), image.size().width()),
        });
    }
    let data = image.data();
    Ok(PixelSequence {
        values: order.sequence().iter().map(|p| data[p.0]).collect(),
    })
}

/// Lag-k autocorrelation `sum_i y_i y_{i+k} / sum_i y_i^2`, taken literally
/// with no mean subtraction. In `[0, 1]` for nonnegative sequences.
pub fn autocorrelation(seq: &PixelSequence, lag: usize) -> Result<f64> {
    let y = seq.values();
    if lag == 0 || lag >= y.len() {
        return Err(Error::InvalidInput(format!(
            "lag {lag} out of range for sequence of length {}",
            y.len()
        )));
    }
    let denom: f64 = y.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::UndefinedObjective(
            "autocorrelation of an all-zero sequence",
        ));
    }
    let numer: f64 = y[..y.len() - lag]
        .iter()
        .zip(&y[lag..])
        .map(|(a, b)| a * b)
        .sum();
    Ok(numer / denom)
}

/// Raw objective value: `-rho_k` or the LZW byte count.
pub fn objective(image: &GrayImage, order: &SfcOrder, kind: ObjectiveKind) -> Result<f64> {
    let seq = flatten(image, order)?;
    match kind {
        ObjectiveKind::NegAutocorrelation { lag } => Ok(-autocorrelation(&seq, lag)?),
        ObjectiveKind::LzwLength => Ok(lzw::lzw_length(&seq.to_bytes())? as f64),
    }
}

/// Clip bound keeping normalized objectives strictly inside (0, 1).
pub const NORMALIZED_EPSILON: f64 = 1e-4;

/// Maps the objective into `(0, 1)` for the evaluator's sigmoid head:
/// `(1 - rho_k) / 2` for autocorrelation, `L / (2 H W)` for LZW length,
/// both clipped to `(eps, 1 - eps)`. The map is affine, so rankings are
/// preserved.
pub fn normalized_objective(
    image: &GrayImage,
    order: &SfcOrder,
    kind: ObjectiveKind,
) -> Result<f64> {
    let raw = objective(image, order, kind)?;
    let mapped = match kind {
        // raw = -rho_k, so (1 + raw) / 2 = (1 - rho_k) / 2.
        ObjectiveKind::NegAutocorrelation { .. } => (1.0 + raw) / 2.0,
        ObjectiveKind::LzwLength => raw / (2.0 * image.size().pixel_count() as f64),
    };
    Ok(mapped.clamp(NORMALIZED_EPSILON, 1.0 - NORMALIZED_EPSILON))
}
