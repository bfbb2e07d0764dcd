//! Alternating training of the weight generator and evaluator.
//!
//! Each iteration takes one generator step (minimize the evaluator's
//! estimate of the batch-mean weights, evaluator frozen) and one evaluator
//! step (regress the true normalized objective of orders induced by mixed
//! weight sources: the generator's output, per-image merge costs, or unit
//! Gaussian noise).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cover::{dafner_weights, sfc_from_weights, EdgeWeights};
use crate::error::{Error, Result};
use crate::image::{GrayImage, ImageBatch};
use crate::objective::{normalized_objective, ObjectiveKind};
use crate::learner::layers::ConvScratch;
use crate::learner::nets::{
    EvaluatorParams, GeneratorParams, GridContext, NetConfig,
};

/// What the training optimizes. Multiple autocorrelation lags are averaged
/// evenly into one target.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainObjective {
    Autocorrelation { lags: Vec<usize> },
    LzwLength,
}

impl TrainObjective {
    /// Mean normalized objective of `image` flattened along the order
    /// induced by `weights`.
    pub(crate) fn ground_truth(
        &self,
        image: &GrayImage,
        order: &crate::cover::SfcOrder,
    ) -> Result<f64> {
        match self {
            TrainObjective::Autocorrelation { lags } => {
                if lags.is_empty() {
                    return Err(Error::InvalidInput("empty lag set".into()));
                }
                let mut total = 0.0;
                for &lag in lags {
                    total +=
                        normalized_objective(image, order, ObjectiveKind::NegAutocorrelation { lag })?;
                }
                Ok(total / lags.len() as f64)
            }
            TrainObjective::LzwLength => {
                normalized_objective(image, order, ObjectiveKind::LzwLength)
            }
        }
    }
}

/// Training hyperparameters. The defaults are tuned so a full run on a few
/// hundred 32x32 images finishes in minutes on one core.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_generator: f64,
    pub lr_evaluator: f64,
    pub momentum: f64,
    /// Probability of replacing an example's weights with its merge costs.
    pub p_dafner: f64,
    /// Probability of replacing an example's weights with unit Gaussians.
    pub p_noise: f64,
    pub objective: TrainObjective,
    pub iterations: usize,
    pub seed: u64,
    /// Evaluate the held-out objective every this many iterations.
    pub eval_every: usize,
    pub net: NetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            lr_generator: 0.02,
            lr_evaluator: 0.01,
            momentum: 0.9,
            p_dafner: 0.25,
            p_noise: 0.25,
            objective: TrainObjective::Autocorrelation { lags: vec![6] },
            iterations: 2000,
            seed: 0,
            eval_every: 50,
            net: NetConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.iterations == 0 {
            return Err(Error::InvalidInput(
                "batch size and iteration count must be positive".into(),
            ));
        }
        if self.p_dafner < 0.0 || self.p_noise < 0.0 || self.p_dafner + self.p_noise > 1.0 {
            return Err(Error::InvalidInput(
                "mixture probabilities must be nonnegative and sum to at most 1".into(),
            ));
        }
        Ok(())
    }
}

/// One history row per iteration.
#[derive(Clone, Debug)]
pub struct HistoryRecord {
    pub iteration: usize,
    /// Mean evaluator estimate of the generator's batch-mean weights.
    pub generator_loss: f64,
    /// Mean squared error of the evaluator on the mixed batch.
    pub evaluator_loss: f64,
    /// Mean true normalized objective of the generator's current order on
    /// the held-out slice; present at `eval_every` checkpoints.
    pub heldout_objective: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub generator: GeneratorParams,
    pub evaluator: EvaluatorParams,
    pub history: Vec<HistoryRecord>,
}

/// Flat-vector SGD with momentum.
struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    fn new(lr: f64, momentum: f64, len: usize) -> Self {
        Self {
            lr,
            momentum,
            velocity: vec![0.0; len],
        }
    }

    fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[&[f64]]) {
        let mut offset = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (pv, &gv) in p.iter_mut().zip(g.iter()) {
                let v = &mut self.velocity[offset];
                *v = self.momentum * *v + gv;
                *pv -= self.lr * *v;
                offset += 1;
            }
        }
        debug_assert_eq!(offset, self.velocity.len());
    }
}

/// The generator's batch-mean weights over a slice of images.
pub(crate) fn mean_generated_weights(
    ctx: &GridContext,
    generator: &GeneratorParams,
    images: &[GrayImage],
) -> Result<EdgeWeights> {
    let refs: Vec<&GrayImage> = images.iter().collect();
    let (per_image, _) = generator.forward_batch(ctx, &refs);
    let mut mean = vec![0.0; ctx.edge_count()];
    for w in &per_image {
        for (m, v) in mean.iter_mut().zip(w) {
            *m += v;
        }
    }
    let inv = 1.0 / images.len().max(1) as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    EdgeWeights::new(mean)
}

/// Mean true objective of the order induced by the generator's batch-mean
/// weights over `images`.
pub(crate) fn heldout_objective(
    ctx: &GridContext,
    generator: &GeneratorParams,
    objective: &TrainObjective,
    images: &[GrayImage],
) -> Result<f64> {
    let wbar = mean_generated_weights(ctx, generator, images)?;
    let order = sfc_from_weights(ctx.size(), &wbar)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for image in images {
        match objective.ground_truth(image, &order) {
            Ok(v) => {
                total += v;
                count += 1;
            }
            // All-zero images have no defined autocorrelation; skip them.
            Err(Error::UndefinedObjective(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if count == 0 {
        return Err(Error::UndefinedObjective(
            "no image in the held-out slice has a defined objective",
        ));
    }
    Ok(total / count as f64)
}

/// Runs the alternating loop. `heldout` is only scored, never trained on.
pub fn train(
    dataset: &ImageBatch,
    heldout: &ImageBatch,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    config.validate()?;
    let size = dataset
        .size()
        .ok_or(Error::EmptyInput("training dataset"))?;
    if let Some(hsize) = heldout.size() {
        if hsize != size {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", size.height(), size.width()),
                got: format!("{}x{}", hsize.height(), hsize.width()),
            });
        }
    }
    let ctx = GridContext::new(size);
    let ne = ctx.edge_count();
    let images = dataset.images();

    let mut generator = GeneratorParams::init(config.seed, config.net);
    let mut evaluator = EvaluatorParams::init(config.seed.wrapping_add(1), config.net);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));

    let gen_len: usize = generator.named_tensors().iter().map(|(_, _, t)| t.len()).sum();
    let eval_len: usize = evaluator.named_tensors().iter().map(|(_, _, t)| t.len()).sum();
    let mut opt_g = Sgd::new(config.lr_generator, config.momentum, gen_len);
    let mut opt_e = Sgd::new(config.lr_evaluator, config.momentum, eval_len);

    // Per-image merge costs are fixed; compute lazily and cache.
    let mut dafner_cache: Vec<Option<EdgeWeights>> = vec![None; images.len()];
    let mut scratch = ConvScratch::default();
    let mut gen_grads = generator.zero_grads();
    let mut eval_grads = evaluator.zero_grads();

    let mut history = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let batch: Vec<usize> = (0..config.batch_size)
            .map(|_| rng.gen_range(0..images.len()))
            .collect();
        let b = batch.len();
        let inv_b = 1.0 / b as f64;

        // ---- Generator step: minimize mean evaluator estimate. ----
        let image_refs: Vec<&GrayImage> = batch.iter().map(|&i| &images[i]).collect();
        let (weights_per_image, gen_cache) =
            generator.forward_batch_with(&ctx, &image_refs, &mut scratch);
        let mut wbar = vec![0.0; ne];
        for w in &weights_per_image {
            for (m, v) in wbar.iter_mut().zip(w) {
                *m += v * inv_b;
            }
        }

        let eval_enc = evaluator.encode_batch_with(&ctx, &image_refs, &mut scratch);
        let mut d_wbar = vec![0.0; ne];
        let mut generator_loss = 0.0f64;
        for i in 0..b {
            let head = evaluator.head_forward(&ctx, &eval_enc, i, &wbar);
            generator_loss += head.out * inv_b;
            // d(mean estimate)/d(wbar), evaluator parameters frozen.
            let (dw, _) = evaluator.backward_head(&ctx, &head, inv_b, None);
            for (a, v) in d_wbar.iter_mut().zip(&dw) {
                *a += v;
            }
        }
        if !generator_loss.is_finite() {
            return Err(Error::Diverged {
                iteration,
                what: "generator loss",
            });
        }
        // The batch mean distributes the gradient evenly over images.
        let d_w_each: Vec<f64> = d_wbar.iter().map(|v| v * inv_b).collect();
        let d_w_all: Vec<Vec<f64>> = (0..b).map(|_| d_w_each.clone()).collect();
        gen_grads.zero();
        generator.backward_batch_with(&ctx, &gen_cache, &d_w_all, &mut gen_grads, &mut scratch);
        opt_g.step(&mut generator.tensors_mut(), &gen_grads.tensors());

        // ---- Evaluator step: regress true objectives of mixed weights. ----
        // Each example keeps the generator's weights, or swaps in its merge
        // costs or unit noise; the evaluator trains on each example's own
        // weight vector so it sees the full diversity of weight sources.
        let mut mixed = weights_per_image;
        for (slot, &idx) in mixed.iter_mut().zip(&batch) {
            let r: f64 = rng.gen();
            if r < config.p_dafner {
                let w = dafner_cache[idx]
                    .get_or_insert_with(|| dafner_weights(&images[idx]))
                    .clone();
                *slot = w.values().to_vec();
            } else if r < config.p_dafner + config.p_noise {
                *slot = (0..ne).map(|_| StandardNormal.sample(&mut rng)).collect();
            }
        }
        let mixed_weights: Vec<EdgeWeights> = mixed
            .into_iter()
            .map(EdgeWeights::new)
            .collect::<Result<_>>()?;

        eval_grads.zero();
        let mut d_pooled_all: Vec<Vec<f64>> = vec![Vec::new(); b];
        let mut evaluator_loss = 0.0f64;
        let mut scored = 0usize;
        for i in 0..b {
            let order = sfc_from_weights(size, &mixed_weights[i])?;
            let truth = match config.objective.ground_truth(&images[batch[i]], &order) {
                Ok(v) => v,
                Err(Error::UndefinedObjective(_)) => continue,
                Err(e) => return Err(e),
            };
            // The encoder output depends only on the image, so the cache
            // from the generator step is still valid here.
            let head = evaluator.head_forward(&ctx, &eval_enc, i, mixed_weights[i].values());
            let err = head.out - truth;
            evaluator_loss += err * err;
            scored += 1;
            let d_out = 2.0 * err * inv_b;
            let (_, d_pooled) =
                evaluator.backward_head(&ctx, &head, d_out, Some(&mut eval_grads));
            d_pooled_all[i] = d_pooled;
        }
        if scored > 0 {
            evaluator_loss /= scored as f64;
        }
        if !evaluator_loss.is_finite() {
            return Err(Error::Diverged {
                iteration,
                what: "evaluator loss",
            });
        }
        evaluator.backward_encoder_with(&ctx, &eval_enc, &d_pooled_all, &mut eval_grads, &mut scratch);
        opt_e.step(&mut evaluator.tensors_mut(), &eval_grads.tensors());

        let heldout_score = if !heldout.is_empty()
            && (iteration % config.eval_every == 0 || iteration + 1 == config.iterations)
        {
            Some(heldout_objective(
                &ctx,
                &generator,
                &config.objective,
                heldout.images(),
            )?)
        } else {
            None
        };
        history.push(HistoryRecord {
            iteration,
            generator_loss,
            evaluator_loss,
            heldout_objective: heldout_score,
        });
    }

    Ok(TrainOutput {
        generator,
        evaluator,
        history,
    })
}
