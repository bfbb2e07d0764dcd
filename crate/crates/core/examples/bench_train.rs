use sfc_core::image::{GrayImage, ImageBatch};
use sfc_core::grid::GridSize;
use sfc_core::learner::{train, TrainConfig};
use std::time::Instant;

fn main() {
    let size = GridSize::new(32, 32).unwrap();
    let images: Vec<GrayImage> = (0..64)
        .map(|i| {
            GrayImage::new(size, (0..1024).map(|j| (((i * 97 + j * 31) % 256) as f64) / 255.0).collect()).unwrap()
        })
        .collect();
    let batch = ImageBatch::new(images).unwrap();
    let config = TrainConfig { iterations: 100, eval_every: 1000, ..TrainConfig::default() };
    let t0 = Instant::now();
    let out = train(&batch, &ImageBatch::default(), &config).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("100 iters in {:.2}s -> {:.3}s/iter; eloss {:.5}", dt, dt / 100.0, out.history.last().unwrap().evaluator_loss);
}
