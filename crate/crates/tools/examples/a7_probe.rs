use sfc_core::learner::{train, GridContext, TrainConfig, TrainObjective};
use sfc_core::{autocorrelation, flatten, sfc_from_weights, universal_order, CurveKind, ImageBatch};
use sfc_tools::dataset::{load_dataset, DataSource, DatasetSpec};
use std::time::Instant;

fn mean_rho6(images: &ImageBatch, order: &sfc_core::SfcOrder) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for im in images.images() {
        let seq = flatten(im, order).unwrap();
        if let Ok(r) = autocorrelation(&seq, 6) {
            total += r;
            n += 1;
        }
    }
    total / n as f64
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0);
    let lr_f: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.02);
    let lr_e: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let iters: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(2000);

    let spec = DatasetSpec {
        source: DataSource::Idx {
            images: "data/mnist/train-images-idx3-ubyte".into(),
            labels: Some("data/mnist/train-labels-idx1-ubyte".into()),
        },
        class_filter: Some(0),
        pad_to: Some(32),
        limit: Some(700),
    };
    let all = load_dataset(&spec).unwrap();
    let train_set = ImageBatch::new(all.images()[..500].to_vec()).unwrap();
    let held = ImageBatch::new(all.images()[500..700].to_vec()).unwrap();

    let size = train_set.size().unwrap();
    let hilbert = universal_order(CurveKind::Hilbert, size).unwrap();
    let hil_rho = mean_rho6(&held, &hilbert);
    println!("heldout hilbert rho6 = {hil_rho:.4}");

    let config = TrainConfig {
        iterations: iters,
        seed,
        lr_generator: lr_f,
        lr_evaluator: lr_e,
        objective: TrainObjective::Autocorrelation { lags: vec![6] },
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let out = train(&train_set, &held, &config).unwrap();
    let secs = t0.elapsed().as_secs_f64();

    let at50: f64 = out.history[40..60.min(out.history.len())]
        .iter()
        .map(|h| h.evaluator_loss)
        .sum::<f64>()
        / 20.0;
    let n = out.history.len();
    let end: f64 = out.history[n - 20..]
        .iter()
        .map(|h| h.evaluator_loss)
        .sum::<f64>()
        / 20.0;

    let ctx = GridContext::new(size);
    let _ = &ctx;
    let wbar_of = |set: &ImageBatch| {
        sfc_core::learner::batch_mean_weights(
            &set.images()
                .iter()
                .map(|im| sfc_core::learner::generate(im, &out.generator).unwrap())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    };
    let gen_rho = mean_rho6(&held, &sfc_from_weights(size, &wbar_of(&held)).unwrap());
    let train_rho = mean_rho6(
        &held,
        &sfc_from_weights(size, &wbar_of(&train_set)).unwrap(),
    );
    println!("train-wbar order rho6 on heldout = {train_rho:.4}");

    println!(
        "seed={seed} lr_f={lr_f} lr_e={lr_e} iters={iters}: {secs:.0}s  eloss@50={at50:.5} end={end:.5} ratio={:.3}  gen rho6={gen_rho:.4} vs hilbert={hil_rho:.4} margin={:+.4}",
        end / at50,
        gen_rho - hil_rho
    );
    // history trace every 200 iters
    for h in out.history.iter().filter(|h| h.iteration % 200 == 0) {
        println!(
            "  it {:4}  f_loss {:.4}  e_loss {:.5}  heldout {:?}",
            h.iteration, h.generator_loss, h.evaluator_loss, h.heldout_objective
        );
    }
}
