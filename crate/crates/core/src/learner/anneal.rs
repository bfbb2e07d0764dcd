//! Gradient-free baseline: simulated annealing directly over the dual-edge
//! weight vector, scoring candidate orders with the same non-differentiable
//! pipeline the evaluator is trained to approximate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cover::{dafner_weights, sfc_from_weights, EdgeWeights};
use crate::error::{Error, Result};
use crate::image::ImageBatch;
use crate::objective::{normalized_objective, ObjectiveKind};
use crate::learner::nets::batch_mean_weights;

/// Geometric cooling schedule and proposal scale.
#[derive(Clone, Copy, Debug)]
pub struct AnnealSchedule {
    pub steps: usize,
    pub temp_start: f64,
    pub temp_end: f64,
    /// Standard deviation of the single-coordinate Gaussian proposal.
    pub sigma: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            steps: 20_000,
            temp_start: 2e-3,
            temp_end: 1e-6,
            sigma: 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnnealResult {
    /// Best-seen weights (the initialization counts as seen).
    pub weights: EdgeWeights,
    /// Mean normalized objective of the best-seen weights.
    pub energy: f64,
    /// Energy of the initialization, for reference.
    pub initial_energy: f64,
    pub accepted: usize,
}

/// Mean normalized objective over the set of the order induced by `weights`.
/// Images without a defined objective (all-zero under autocorrelation) are
/// skipped.
fn set_energy(images: &ImageBatch, kind: ObjectiveKind, weights: &EdgeWeights) -> Result<f64> {
    let size = images.size().ok_or(Error::EmptyInput("image set"))?;
    let order = sfc_from_weights(size, weights)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for image in images.images() {
        match normalized_objective(image, &order, kind) {
            Ok(v) => {
                total += v;
                count += 1;
            }
            Err(Error::UndefinedObjective(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if count == 0 {
        return Err(Error::UndefinedObjective(
            "no image in the set has a defined objective",
        ));
    }
    Ok(total / count as f64)
}

/// Anneals the shared weight vector for an image set, starting from the mean
/// of the per-image merge costs. Returns the best weights seen; with zero
/// steps that is exactly the initialization.
pub fn anneal(
    images: &ImageBatch,
    kind: ObjectiveKind,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<AnnealResult> {
    if images.is_empty() {
        return Err(Error::EmptyInput("anneal image set"));
    }
    let per_image: Vec<EdgeWeights> = images.images().iter().map(dafner_weights).collect();
    let mut current = batch_mean_weights(&per_image)?;
    let mut current_energy = set_energy(images, kind, &current)?;
    let initial_energy = current_energy;
    let mut best = current.clone();
    let mut best_energy = current_energy;

    let ne = current.len();
    if ne == 0 || schedule.steps == 0 {
        return Ok(AnnealResult {
            weights: best,
            energy: best_energy,
            initial_energy,
            accepted: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cool = (schedule.temp_end / schedule.temp_start)
        .powf(1.0 / schedule.steps as f64);
    let mut temp = schedule.temp_start;
    let mut accepted = 0usize;
    let mut values = current.values().to_vec();
    for _ in 0..schedule.steps {
        let coord = rng.gen_range(0..ne);
        let old = values[coord];
        let noise: f64 = StandardNormal.sample(&mut rng);
        values[coord] = old + schedule.sigma * noise;
        let candidate = EdgeWeights::new(values.clone())?;
        let energy = set_energy(images, kind, &candidate)?;
        let delta = energy - current_energy;
        let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp();
        if accept {
            current = candidate;
            current_energy = energy;
            accepted += 1;
            if energy < best_energy {
                best = current.clone();
                best_energy = energy;
            }
        } else {
            values[coord] = old;
        }
        temp *= cool;
    }

    Ok(AnnealResult {
        weights: best,
        energy: best_energy,
        initial_energy,
        accepted,
    })
}
