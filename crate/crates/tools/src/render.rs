//! Visual emitters: an SVG overlay of the curve polyline on the image, and
//! the flattened 1-row strip image.

use sfc_core::{flatten, GrayImage, SfcOrder};

use crate::error::Result;

/// Pixels per cell in the rendered overlay.
const CELL: usize = 12;

/// Draws the image as gray cells with the scan order as a red polyline
/// through pixel centers (`H*W - 1` segments).
pub fn render_overlay(image: &GrayImage, order: &SfcOrder) -> Result<String> {
    let seq = flatten(image, order)?; // validates matching sizes
    let _ = seq;
    let size = image.size();
    let (h, w) = (size.height(), size.width());
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">\n",
        w * CELL,
        h * CELL,
        w * CELL,
        h * CELL
    ));
    for r in 0..h {
        for c in 0..w {
            let level = (image.get(r, c) * 255.0).round() as u8;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({level},{level},{level})\"/>\n",
                c * CELL,
                r * CELL
            ));
        }
    }
    let points: Vec<String> = order
        .sequence()
        .iter()
        .map(|p| {
            let (r, c) = size.pixel_coords(*p);
            format!("{},{}", c * CELL + CELL / 2, r * CELL + CELL / 2)
        })
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
        points.join(" ")
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Flattens the image along the order and emits it as a 1 x (H*W) graymap.
/// The 1-row raster is a pure visualization output, so it bypasses the
/// even-size constraint curve-ready images carry.
pub fn render_strip(image: &GrayImage, order: &SfcOrder) -> Result<Vec<u8>> {
    let seq = flatten(image, order)?;
    let mut out = format!("P5\n{} 1\n255\n", seq.len()).into_bytes();
    out.extend(seq.to_bytes());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sfc_core::{universal_order, CurveKind, GridSize};

    #[test]
    fn overlay_has_one_polyline_through_all_pixels() {
        let size = GridSize::new(4, 4).unwrap();
        let image = GrayImage::constant(size, 0.5).unwrap();
        let order = universal_order(CurveKind::Serpentine, size).unwrap();
        let svg = render_overlay(&image, &order).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        // 16 points -> 15 segments.
        let points = svg.split("points=\"").nth(1).unwrap();
        let points = &points[..points.find('"').unwrap()];
        assert_eq!(points.split(' ').count(), 16);
        assert_eq!(svg.matches("<rect").count(), 16);
    }

    #[test]
    fn strip_of_constant_image_is_constant() {
        let size = GridSize::new(4, 4).unwrap();
        let image = GrayImage::constant(size, 0.25).unwrap();
        let order = universal_order(CurveKind::Hilbert, size).unwrap();
        let bytes = render_strip(&image, &order).unwrap();
        let text = String::from_utf8_lossy(&bytes[..11]);
        assert!(text.starts_with("P5\n16 1"));
        let raster = &bytes[bytes.len() - 16..];
        assert!(raster.iter().all(|&b| b == raster[0]));
    }
}
