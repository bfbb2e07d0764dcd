//! Plain-text curve files: a small header of `key value` lines, then the
//! order as whitespace-separated row-major pixel indices. Text keeps the
//! files diffable; validation runs on read so downstream consumers can trust
//! any file that loads.

use std::fs;
use std::path::Path;

use sfc_core::{GridSize, PixelId, SfcOrder};

use crate::error::{Result, ToolError};

const FORMAT_TAG: &str = "sfc-curve";
const FORMAT_VERSION: u32 = 1;

/// A scan order with identification and optional provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveFile {
    pub kind: String,
    pub order: SfcOrder,
    /// Objective tag like `ac6` or `lzw`, when an optimizer produced this.
    pub objective: Option<String>,
    pub seed: Option<u64>,
    /// Free-form source description (dataset, class, checkpoint...).
    pub source: Option<String>,
}

impl CurveFile {
    pub fn new(kind: impl Into<String>, order: SfcOrder) -> Self {
        Self {
            kind: kind.into(),
            order,
            objective: None,
            seed: None,
            source: None,
        }
    }

    /// Raster is exempt from the adjacency invariant; everything else must
    /// be a genuine space-filling curve.
    pub fn is_raster(&self) -> bool {
        self.kind == "raster"
    }
}

pub fn write_curve(path: impl AsRef<Path>, curve: &CurveFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_curve(curve)).map_err(ToolError::io(path))
}

pub fn encode_curve(curve: &CurveFile) -> String {
    let size = curve.order.size();
    let mut out = String::new();
    out.push_str(&format!("{FORMAT_TAG} v{FORMAT_VERSION}\n"));
    out.push_str(&format!("kind {}\n", curve.kind));
    out.push_str(&format!("height {}\n", size.height()));
    out.push_str(&format!("width {}\n", size.width()));
    if let Some(obj) = &curve.objective {
        out.push_str(&format!("objective {obj}\n"));
    }
    if let Some(seed) = curve.seed {
        out.push_str(&format!("seed {seed}\n"));
    }
    if let Some(src) = &curve.source {
        out.push_str(&format!("source {src}\n"));
    }
    out.push_str("order\n");
    for row in curve.order.sequence().chunks(16) {
        let line: Vec<String> = row.iter().map(|p| p.0.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<CurveFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(ToolError::io(path))?;
    parse_curve(&text).map_err(|what| ToolError::Parse {
        path: path.to_owned(),
        offset: 0,
        what,
    })
}

pub fn parse_curve(text: &str) -> std::result::Result<CurveFile, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let expected = format!("{FORMAT_TAG} v{FORMAT_VERSION}");
    if header.trim() != expected {
        return Err(format!("bad header {header:?}, expected {expected:?}"));
    }
    let mut kind = None;
    let mut height = None;
    let mut width = None;
    let mut objective = None;
    let mut seed = None;
    let mut source = None;
    let mut rest = Vec::new();
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "order" {
            rest = lines.collect();
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| format!("malformed header line {line:?}"))?;
        match key {
            "kind" => kind = Some(value.to_string()),
            "height" => height = Some(value.parse::<usize>().map_err(|e| e.to_string())?),
            "width" => width = Some(value.parse::<usize>().map_err(|e| e.to_string())?),
            "objective" => objective = Some(value.to_string()),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| e.to_string())?),
            "source" => source = Some(value.to_string()),
            other => return Err(format!("unknown header key {other:?}")),
        }
    }
    let kind = kind.ok_or("missing kind")?;
    let height = height.ok_or("missing height")?;
    let width = width.ok_or("missing width")?;
    let size = GridSize::with_max_pixels(height, width, usize::MAX).map_err(|e| e.to_string())?;

    let sequence: Vec<PixelId> = rest
        .iter()
        .flat_map(|l| l.split_whitespace())
        .map(|tok| tok.parse::<usize>().map(PixelId))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("bad order entry: {e}"))?;

    let order = if kind == "raster" {
        SfcOrder::new_unchecked_adjacency(size, sequence).map_err(|e| e.to_string())?
    } else {
        SfcOrder::new(size, sequence).map_err(|e| e.to_string())?
    };
    Ok(CurveFile {
        kind,
        order,
        objective,
        seed,
        source,
    })
}
