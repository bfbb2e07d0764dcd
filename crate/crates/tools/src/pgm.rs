//! Binary P5 portable graymap reader/writer, the image interchange format
//! of the toolkit (no codec dependencies, 8-bit samples only).

use std::fs;
use std::path::Path;

use sfc_core::{GrayImage, GridSize};

use crate::error::{Result, ToolError};

/// Parses a P5 header token, skipping whitespace and `#` comments.
fn next_token(path: &Path, bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: start,
            what: "expected header token".into(),
        });
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ToolError::Parse {
            path: path.to_owned(),
            offset: start,
            what: "header token is not a number".into(),
        })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(ToolError::io(path))?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: 0,
            what: "not a binary P5 graymap".into(),
        });
    }
    let mut pos = 2;
    let width = next_token(path, &bytes, &mut pos)?;
    let height = next_token(path, &bytes, &mut pos)?;
    let maxval = next_token(path, &bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: pos,
            what: format!("unsupported maxval {maxval}; only 8-bit graymaps"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(ToolError::Parse {
            path: path.to_owned(),
            offset: bytes.len(),
            what: format!("raster truncated: need {need} samples"),
        });
    }
    let size = GridSize::with_max_pixels(height, width, usize::MAX).map_err(|e| {
        ToolError::Data(format!("{}: {e}", path.display()))
    })?;
    let scale = 255.0 / maxval as f64;
    let data = bytes[pos..pos + need]
        .iter()
        .map(|&b| (f64::from(b) * scale / 255.0).min(1.0))
        .collect();
    Ok(GrayImage::new(size, data)?)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(ToolError::io(path))
}

/// Encodes height x width samples; also used for 1-row strip images.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let size = image.size();
    let mut out = format!("P5\n{} {}\n255\n", size.width(), size.height()).into_bytes();
    out.extend(image.to_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let size = GridSize::new(4, 6).unwrap();
        let image = GrayImage::from_bytes(
            size,
            &(0..24).map(|i| (i * 10) as u8).collect::<Vec<_>>(),
        )
        .unwrap();
        write_pgm(&path, &image).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.size(), size);
        assert_eq!(back.to_bytes(), image.to_bytes());
    }

    #[test]
    fn comments_and_whitespace_are_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5 # comment\n# another\n 2\t2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 85, 170, 255]);
        std::fs::write(&path, bytes).unwrap();
        let im = read_pgm(&path).unwrap();
        assert_eq!(im.to_bytes(), vec![0, 85, 170, 255]);
    }

    #[test]
    fn rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P6\n2 2\n255\n....").unwrap();
        assert!(read_pgm(&path).is_err());
        std::fs::write(&path, b"P5\n2 2\n255\nab").unwrap();
        assert!(read_pgm(&path).is_err());
    }
}
