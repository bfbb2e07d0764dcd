//! Command-line surface of the toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/processing error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sfc_core::learner::{
    anneal, batch_mean_weights, generate, load_checkpoint, save_checkpoint, AnnealSchedule,
    Checkpoint, CheckpointPayload, TrainConfig, TrainObjective,
};
use sfc_core::{
    dafner_weights, scale_order, sfc_from_weights, universal_order, CurveKind, GridSize,
    ImageBatch, ObjectiveKind,
};
use sfc_tools::bench::{benchmark, BenchOrder};
use sfc_tools::curve_file::{read_curve, write_curve, CurveFile};
use sfc_tools::dataset::{load_dataset, DataSource, DatasetSpec};
use sfc_tools::{data_dir, render, ToolError};

#[derive(Parser)]
#[command(
    name = "sfc",
    about = "Context-based space-filling curves for images",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a curve file (universal or optimized scan orders)
    Curve(CurveArgs),
    /// Lag sweep: mean autocorrelation per order as CSV
    Metrics(MetricsArgs),
    /// LZW byte counts along a curve
    Compress(CompressArgs),
    /// Double the resolution of a curve file
    Scale(ScaleArgs),
    /// Train the weight generator/evaluator pair
    Train(TrainArgs),
    /// Benchmark harness: orders x lags (+ LZW) as CSV
    Bench(BenchArgs),
    /// Render a curve as an SVG overlay or a 1-row strip
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKindArg {
    Raster,
    Serpentine,
    Hilbert,
    Dafner,
    MeanDafner,
    Annealed,
    Generated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// Negative lag-k autocorrelation
    Ac,
    /// LZW code length
    Lzw,
}

#[derive(Args)]
struct DataArgs {
    /// IDX images file, directory of .pgm files, or dataset shorthand
    /// (mnist, fashion-mnist; resolved under $SFC_DATA_DIR or ./data)
    #[arg(long)]
    source: Option<String>,
    /// IDX labels file (implied for dataset shorthands)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Use the test split of a dataset shorthand instead of train
    #[arg(long)]
    test_split: bool,
    /// Keep only images with this label
    #[arg(long)]
    class: Option<u8>,
    /// Zero-pad to this square size
    #[arg(long)]
    pad: Option<usize>,
    /// Keep at most this many images
    #[arg(long)]
    limit: Option<usize>,
}

impl DataArgs {
    fn resolve(&self) -> Result<ImageBatch, ToolError> {
        let source = self.source.as_deref().ok_or_else(|| {
            ToolError::Data("missing --source (IDX file, .pgm directory, or dataset name)".into())
        })?;
        let (src, pad) = match source {
            "mnist" | "fashion-mnist" => {
                let base = data_dir().join(source);
                let stem = if self.test_split { "t10k" } else { "train" };
                (
                    DataSource::Idx {
                        images: base.join(format!("{stem}-images-idx3-ubyte")),
                        labels: Some(base.join(format!("{stem}-labels-idx1-ubyte"))),
                    },
                    Some(self.pad.unwrap_or(32)),
                )
            }
            path => {
                let p = PathBuf::from(path);
                if p.is_dir() {
                    (DataSource::PgmDir(p), self.pad)
                } else {
                    (
                        DataSource::Idx {
                            images: p,
                            labels: self.labels.clone(),
                        },
                        self.pad,
                    )
                }
            }
        };
        load_dataset(&DatasetSpec {
            source: src,
            class_filter: self.class,
            pad_to: pad,
            limit: self.limit,
        })
    }
}

#[derive(Args)]
struct CurveArgs {
    /// Which curve to construct
    #[arg(long, value_enum)]
    kind: CurveKindArg,
    /// Square grid size for universal curves (e.g. 32)
    #[arg(long)]
    size: Option<usize>,
    /// Grid height/width for non-square universal curves
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
    /// Image index for single-image curves (dafner)
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Objective for the annealed curve
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ac)]
    objective: ObjectiveArg,
    /// Autocorrelation lag
    #[arg(long, default_value_t = 6)]
    lag: usize,
    /// Annealing steps
    #[arg(long, default_value_t = 20_000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trained generator checkpoint for --kind generated
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Curve files to score; defaults to raster+serpentine+hilbert
    #[arg(long)]
    curve: Vec<PathBuf>,
    /// Lags to sweep (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6,8,10")]
    lag: Vec<usize>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Curve file defining the scan order
    #[arg(long)]
    curve: PathBuf,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ScaleArgs {
    /// Input curve file
    #[arg(long)]
    curve: PathBuf,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Hold out this many images for history scoring
    #[arg(long, default_value_t = 200)]
    heldout: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ac)]
    objective: ObjectiveArg,
    /// Autocorrelation lags (averaged evenly when several)
    #[arg(long, value_delimiter = ',', default_value = "6")]
    lag: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the generator checkpoint here
    #[arg(long)]
    out: PathBuf,
    /// Also write the evaluator checkpoint
    #[arg(long)]
    evaluator_out: Option<PathBuf>,
    /// Write per-iteration losses as CSV
    #[arg(long)]
    history_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Extra curve files to include
    #[arg(long)]
    curve: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "6,10")]
    lag: Vec<usize>,
    /// Also measure LZW bytes
    #[arg(long)]
    lzw: bool,
    /// Include the train-set mean merge-cost baseline
    #[arg(long)]
    mean_dafner: bool,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    curve: PathBuf,
    /// Image index to render
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// overlay (svg) or strip (pgm)
    #[arg(long, default_value = "overlay")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
}

fn objective_kind(arg: ObjectiveArg, lag: usize) -> ObjectiveKind {
    match arg {
        ObjectiveArg::Ac => ObjectiveKind::NegAutocorrelation { lag },
        ObjectiveArg::Lzw => ObjectiveKind::LzwLength,
    }
}

fn grid_from_args(args: &CurveArgs) -> Result<GridSize, ToolError> {
    let (h, w) = match (args.size, args.height, args.width) {
        (Some(s), None, None) => (s, s),
        (None, Some(h), Some(w)) => (h, w),
        _ => {
            return Err(ToolError::Data(
                "specify either --size or both --height and --width".into(),
            ))
        }
    };
    GridSize::with_max_pixels(h, w, usize::MAX)
        .map_err(|e| ToolError::Data(format!("bad grid: {e}")))
}

fn run_curve(args: CurveArgs) -> Result<(), ToolError> {
    let curve = match args.kind {
        CurveKindArg::Raster | CurveKindArg::Serpentine | CurveKindArg::Hilbert => {
            let size = grid_from_args(&args)?;
            let kind = match args.kind {
                CurveKindArg::Raster => CurveKind::Raster,
                CurveKindArg::Serpentine => CurveKind::Serpentine,
                _ => CurveKind::Hilbert,
            };
            CurveFile::new(kind.name(), universal_order(kind, size)?)
        }
        CurveKindArg::Dafner => {
            let batch = args.data.resolve()?;
            let image = batch.images().get(args.index).ok_or_else(|| {
                ToolError::Data(format!("index {} out of range", args.index))
            })?;
            let weights = dafner_weights(image);
            let order = sfc_from_weights(image.size(), &weights)?;
            let mut curve = CurveFile::new("dafner", order);
            curve.source = Some(format!("image {}", args.index));
            curve
        }
        CurveKindArg::MeanDafner => {
            let batch = args.data.resolve()?;
            let weights: Vec<_> = batch.images().iter().map(dafner_weights).collect();
            let wbar = batch_mean_weights(&weights)?;
            let size = batch.size().expect("nonempty");
            let mut curve = CurveFile::new("mean-dafner", sfc_from_weights(size, &wbar)?);
            curve.source = Some(format!("{} images", batch.len()));
            curve
        }
        CurveKindArg::Annealed => {
            let batch = args.data.resolve()?;
            let kind = objective_kind(args.objective, args.lag);
            let schedule = AnnealSchedule {
                steps: args.steps,
                ..AnnealSchedule::default()
            };
            let result = anneal(&batch, kind, &schedule, args.seed)?;
            let size = batch.size().expect("nonempty");
            let mut curve = CurveFile::new("annealed", sfc_from_weights(size, &result.weights)?);
            curve.objective = Some(kind.name());
            curve.seed = Some(args.seed);
            curve.source = Some(format!(
                "{} images, energy {:.5} (from {:.5})",
                batch.len(),
                result.energy,
                result.initial_energy
            ));
            curve
        }
        CurveKindArg::Generated => {
            let path = args.checkpoint.as_ref().ok_or_else(|| {
                ToolError::Data("--kind generated needs --checkpoint".into())
            })?;
            let mut file = fs::File::open(path).map_err(|e| ToolError::Io {
                path: path.clone(),
                source: e,
            })?;
            let Checkpoint { payload } = load_checkpoint(&mut file)?;
            let CheckpointPayload::Generator(params) = payload else {
                return Err(ToolError::Data(
                    "checkpoint holds an evaluator, not a generator".into(),
                ));
            };
            let batch = args.data.resolve()?;
            let weights: Vec<_> = batch
                .images()
                .iter()
                .map(|im| generate(im, &params))
                .collect::<sfc_core::Result<_>>()?;
            let wbar = batch_mean_weights(&weights)?;
            let size = batch.size().expect("nonempty");
            let mut curve = CurveFile::new("generated", sfc_from_weights(size, &wbar)?);
            curve.source = Some(format!("{} images via {}", batch.len(), path.display()));
            curve
        }
    };
    write_curve(&args.out, &curve)?;
    println!(
        "wrote {} ({} entries)",
        args.out.display(),
        curve.order.len()
    );
    Ok(())
}

fn universal_orders(size: GridSize) -> Vec<BenchOrder> {
    let mut out = vec![
        BenchOrder {
            name: "raster".into(),
            order: universal_order(CurveKind::Raster, size).expect("raster"),
        },
        BenchOrder {
            name: "serpentine".into(),
            order: universal_order(CurveKind::Serpentine, size).expect("serpentine"),
        },
    ];
    if let Ok(hilbert) = universal_order(CurveKind::Hilbert, size) {
        out.push(BenchOrder {
            name: "hilbert".into(),
            order: hilbert,
        });
    }
    out
}

fn load_curve_orders(paths: &[PathBuf], size: GridSize) -> Result<Vec<BenchOrder>, ToolError> {
    paths
        .iter()
        .map(|p| {
            let curve = read_curve(p)?;
            if curve.order.size() != size {
                return Err(ToolError::Data(format!(
                    "{}: curve is {}x{}, images are {}x{}",
                    p.display(),
                    curve.order.size().height(),
                    curve.order.size().width(),
                    size.height(),
                    size.width()
                )));
            }
            Ok(BenchOrder {
                name: p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| curve.kind.clone()),
                order: curve.order,
            })
        })
        .collect()
}

fn emit_csv(csv: &str, out: Option<&Path>) -> Result<(), ToolError> {
    match out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| ToolError::Io {
                path: path.to_owned(),
                source: e,
            })?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_metrics(args: MetricsArgs) -> Result<(), ToolError> {
    let batch = args.data.resolve()?;
    let size = batch
        .size()
        .ok_or_else(|| ToolError::Data("empty dataset".into()))?;
    let mut orders = universal_orders(size);
    orders.extend(load_curve_orders(&args.curve, size)?);
    let table = benchmark(&batch, &orders, &args.lag, false, args.threads)?;
    emit_csv(&table.to_csv(), args.out.as_deref())
}

fn run_compress(args: CompressArgs) -> Result<(), ToolError> {
    let batch = args.data.resolve()?;
    let size = batch
        .size()
        .ok_or_else(|| ToolError::Data("empty dataset".into()))?;
    let orders = load_curve_orders(std::slice::from_ref(&args.curve), size)?;
    let table = benchmark(&batch, &orders, &[], true, args.threads)?;
    let row = &table.rows[0];
    println!(
        "{}: mean {:.2} bytes over {} images",
        row.order,
        row.mean_lzw_bytes.unwrap_or(f64::NAN),
        row.image_count
    );
    Ok(())
}

fn run_scale(args: ScaleArgs) -> Result<(), ToolError> {
    let curve = read_curve(&args.curve)?;
    if curve.is_raster() {
        return Err(ToolError::Data(
            "raster is not an adjacency-valid curve; scaling does not apply".into(),
        ));
    }
    let scaled = scale_order(&curve.order)?;
    let mut out_curve = CurveFile::new(format!("{}-x2", curve.kind), scaled);
    out_curve.objective = curve.objective.clone();
    out_curve.seed = curve.seed;
    out_curve.source = Some(format!("scaled from {}", args.curve.display()));
    write_curve(&args.out, &out_curve)?;
    println!(
        "wrote {} ({} entries)",
        args.out.display(),
        out_curve.order.len()
    );
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<(), ToolError> {
    let batch = args.data.resolve()?;
    if batch.len() <= args.heldout {
        return Err(ToolError::Data(format!(
            "{} images cannot hold out {}",
            batch.len(),
            args.heldout
        )));
    }
    let split = batch.len() - args.heldout;
    let train_set = ImageBatch::new(batch.images()[..split].to_vec())?;
    let heldout = ImageBatch::new(batch.images()[split..].to_vec())?;

    let objective = match args.objective {
        ObjectiveArg::Ac => TrainObjective::Autocorrelation {
            lags: args.lag.clone(),
        },
        ObjectiveArg::Lzw => TrainObjective::LzwLength,
    };
    let config = TrainConfig {
        iterations: args.iterations,
        seed: args.seed,
        objective,
        ..TrainConfig::default()
    };
    let out = sfc_core::learner::train(&train_set, &heldout, &config)?;

    let mut file = fs::File::create(&args.out).map_err(|e| ToolError::Io {
        path: args.out.clone(),
        source: e,
    })?;
    save_checkpoint(&mut file, &CheckpointPayload::Generator(out.generator))?;
    println!("wrote {}", args.out.display());
    if let Some(path) = &args.evaluator_out {
        let mut file = fs::File::create(path).map_err(|e| ToolError::Io {
            path: path.clone(),
            source: e,
        })?;
        save_checkpoint(&mut file, &CheckpointPayload::Evaluator(out.evaluator))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.history_out {
        let mut csv = String::from("iteration,generator_loss,evaluator_loss,heldout_objective\n");
        for h in &out.history {
            csv.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                h.iteration,
                h.generator_loss,
                h.evaluator_loss,
                h.heldout_objective
                    .map(|v| format!("{v:.6}"))
                    .unwrap_or_default()
            ));
        }
        fs::write(path, csv).map_err(|e| ToolError::Io {
            path: path.clone(),
            source: e,
        })?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), ToolError> {
    let batch = args.data.resolve()?;
    let size = batch
        .size()
        .ok_or_else(|| ToolError::Data("empty dataset".into()))?;
    let mut orders = universal_orders(size);
    if args.mean_dafner {
        let weights: Vec<_> = batch.images().iter().map(dafner_weights).collect();
        let wbar = batch_mean_weights(&weights)?;
        orders.push(BenchOrder {
            name: "mean-dafner".into(),
            order: sfc_from_weights(size, &wbar)?,
        });
    }
    orders.extend(load_curve_orders(&args.curve, size)?);
    let table = benchmark(&batch, &orders, &args.lag, args.lzw, args.threads)?;
    emit_csv(&table.to_csv(), args.out.as_deref())
}

fn run_render(args: RenderArgs) -> Result<(), ToolError> {
    let batch = args.data.resolve()?;
    let image = batch
        .images()
        .get(args.index)
        .ok_or_else(|| ToolError::Data(format!("index {} out of range", args.index)))?;
    let curve = read_curve(&args.curve)?;
    match args.mode.as_str() {
        "overlay" => {
            let svg = render::render_overlay(image, &curve.order)?;
            fs::write(&args.out, svg).map_err(|e| ToolError::Io {
                path: args.out.clone(),
                source: e,
            })?;
        }
        "strip" => {
            let bytes = render::render_strip(image, &curve.order)?;
            fs::write(&args.out, bytes).map_err(|e| ToolError::Io {
                path: args.out.clone(),
                source: e,
            })?;
        }
        other => {
            return Err(ToolError::Data(format!(
                "unknown render mode {other:?} (overlay or strip)"
            )))
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Curve(args) => run_curve(args),
        Command::Metrics(args) => run_metrics(args),
        Command::Compress(args) => run_compress(args),
        Command::Scale(args) => run_scale(args),
        Command::Train(args) => run_train(args),
        Command::Bench(args) => run_bench(args),
        Command::Render(args) => run_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
