//! Tooling around the curve engine: dataset ingestion (IDX, P5 graymaps),
//! curve and checkpoint files, visual emitters, and the benchmark harness
//! behind the `sfc` command-line interface.

pub mod bench;
pub mod curve_file;
pub mod dataset;
pub mod error;
pub mod idx;
pub mod pgm;
pub mod render;

pub use bench::{benchmark, BenchOrder, BenchRow, BenchTable};
pub use curve_file::{encode_curve, parse_curve, read_curve, write_curve, CurveFile};
pub use dataset::{load_dataset, pad_images, DataSource, DatasetSpec};
pub use error::{Result, ToolError};
pub use idx::{load_batch, load_idx_images, load_idx_labels, IdxImages};
pub use pgm::{read_pgm, write_pgm};
pub use render::{render_overlay, render_strip};

/// Environment variable naming the default data directory for dataset
/// shorthands (`mnist`, `fashion-mnist`).
pub const DATA_DIR_ENV: &str = "SFC_DATA_DIR";

/// Resolves the data directory: `$SFC_DATA_DIR` or `./data`.
pub fn data_dir() -> std::path::PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("data"))
}
