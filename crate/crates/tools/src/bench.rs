//! Scan-order benchmark: mean lag-k autocorrelation per order over an image
//! set, optionally with mean LZW byte counts. Scoring fans out over a small
//! worker pool; aggregation is a plain sum reduction, so results do not
//! depend on the thread count.

use sfc_core::{autocorrelation, flatten, lzw, ImageBatch, SfcOrder};

use crate::error::{Result, ToolError};

/// One labeled order to score.
pub struct BenchOrder {
    pub name: String,
    pub order: SfcOrder,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub order: String,
    /// Mean autocorrelation per requested lag, over images with a defined
    /// objective.
    pub mean_rho: Vec<f64>,
    /// Mean LZW length in bytes, when requested.
    pub mean_lzw_bytes: Option<f64>,
    pub image_count: usize,
}

pub struct BenchTable {
    pub lags: Vec<usize>,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order");
        for lag in &self.lags {
            out.push_str(&format!(",rho{lag}"));
        }
        out.push_str(",lzw_bytes,images\n");
        for row in &self.rows {
            out.push_str(&row.order);
            for v in &row.mean_rho {
                out.push_str(&format!(",{v:.6}"));
            }
            match row.mean_lzw_bytes {
                Some(b) => out.push_str(&format!(",{b:.2}")),
                None => out.push(','),
            }
            out.push_str(&format!(",{}\n", row.image_count));
        }
        out
    }
}

struct Partial {
    rho_sums: Vec<f64>,
    rho_count: usize,
    lzw_sum: f64,
    lzw_count: usize,
}

fn score_chunk(
    images: &[sfc_core::GrayImage],
    order: &SfcOrder,
    lags: &[usize],
    with_lzw: bool,
) -> Result<Partial> {
    let mut partial = Partial {
        rho_sums: vec![0.0; lags.len()],
        rho_count: 0,
        lzw_sum: 0.0,
        lzw_count: 0,
    };
    for image in images {
        let seq = flatten(image, order)?;
        let mut defined = true;
        for (acc, &lag) in partial.rho_sums.iter_mut().zip(lags) {
            match autocorrelation(&seq, lag) {
                Ok(v) => *acc += v,
                Err(sfc_core::Error::UndefinedObjective(_)) => {
                    defined = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if defined {
            partial.rho_count += 1;
        }
        if with_lzw {
            partial.lzw_sum += lzw::lzw_length(&seq.to_bytes())? as f64;
            partial.lzw_count += 1;
        }
    }
    Ok(partial)
}

/// Scores every order against every image. `threads` caps the worker pool;
/// 0 or 1 runs inline.
pub fn benchmark(
    images: &ImageBatch,
    orders: &[BenchOrder],
    lags: &[usize],
    with_lzw: bool,
    threads: usize,
) -> Result<BenchTable> {
    if images.is_empty() {
        return Err(ToolError::Data("benchmark needs at least one image".into()));
    }
    if lags.is_empty() && !with_lzw {
        return Err(ToolError::Data("nothing to measure".into()));
    }
    let size = images.size().expect("nonempty");
    let mut rows = Vec::with_capacity(orders.len());
    for bench_order in orders {
        if bench_order.order.size() != size {
            return Err(ToolError::Data(format!(
                "order {} is for a different grid size",
                bench_order.name
            )));
        }
        let workers = threads.max(1).min(images.len());
        let chunk = images.len().div_ceil(workers);
        let partials: Vec<Result<Partial>> = if workers <= 1 {
            vec![score_chunk(images.images(), &bench_order.order, lags, with_lzw)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = images
                    .images()
                    .chunks(chunk)
                    .map(|slice| {
                        let order = &bench_order.order;
                        scope.spawn(move || score_chunk(slice, order, lags, with_lzw))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker")).collect()
            })
        };
        let mut rho_sums = vec![0.0; lags.len()];
        let mut rho_count = 0usize;
        let mut lzw_sum = 0.0;
        let mut lzw_count = 0usize;
        for partial in partials {
            let partial = partial?;
            for (a, b) in rho_sums.iter_mut().zip(&partial.rho_sums) {
                *a += b;
            }
            rho_count += partial.rho_count;
            lzw_sum += partial.lzw_sum;
            lzw_count += partial.lzw_count;
        }
        if rho_count == 0 && !lags.is_empty() {
            return Err(ToolError::Data(
                "no image has a defined autocorrelation".into(),
            ));
        }
        rows.push(BenchRow {
            order: bench_order.name.clone(),
            mean_rho: rho_sums
                .iter()
                .map(|s| s / rho_count.max(1) as f64)
                .collect(),
            mean_lzw_bytes: with_lzw.then(|| lzw_sum / lzw_count.max(1) as f64),
            image_count: rho_count.max(lzw_count),
        });
    }
    Ok(BenchTable {
        lags: lags.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sfc_core::{universal_order, CurveKind, GrayImage, GridSize};

    fn constant_batch() -> ImageBatch {
        let size = GridSize::new(32, 32).unwrap();
        ImageBatch::new(vec![
            GrayImage::constant(size, 0.5).unwrap(),
            GrayImage::constant(size, 0.9).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn constant_images_hit_the_closed_form() {
        let images = constant_batch();
        let size = images.size().unwrap();
        let orders = vec![
            BenchOrder {
                name: "raster".into(),
                order: universal_order(CurveKind::Raster, size).unwrap(),
            },
            BenchOrder {
                name: "hilbert".into(),
                order: universal_order(CurveKind::Hilbert, size).unwrap(),
            },
        ];
        let table = benchmark(&images, &orders, &[6, 10], false, 2).unwrap();
        for row in &table.rows {
            assert!((row.mean_rho[0] - (1024.0 - 6.0) / 1024.0).abs() < 1e-12);
            assert!((row.mean_rho[1] - (1024.0 - 10.0) / 1024.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let size = GridSize::new(16, 16).unwrap();
        let images = ImageBatch::new(
            (0..7)
                .map(|k| {
                    GrayImage::new(
                        size,
                        (0..256).map(|i| ((i * (k + 2)) % 97) as f64 / 96.0).collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap();
        let orders = vec![BenchOrder {
            name: "serp".into(),
            order: universal_order(CurveKind::Serpentine, size).unwrap(),
        }];
        let single = benchmark(&images, &orders, &[3], true, 1).unwrap();
        let multi = benchmark(&images, &orders, &[3], true, 4).unwrap();
        assert_eq!(single.rows[0].mean_rho, multi.rows[0].mean_rho);
        assert_eq!(single.rows[0].mean_lzw_bytes, multi.rows[0].mean_lzw_bytes);
    }

    #[test]
    fn csv_layout_is_stable() {
        let images = constant_batch();
        let size = images.size().unwrap();
        let orders = vec![BenchOrder {
            name: "raster".into(),
            order: universal_order(CurveKind::Raster, size).unwrap(),
        }];
        let table = benchmark(&images, &orders, &[6], true, 1).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "order,rho6,lzw_bytes,images");
        assert!(lines.next().unwrap().starts_with("raster,0.994141,"));
    }
}
