//! Finite-difference audit of the hand-written backward passes.
//!
//! Central differences at double precision against the analytic parameter
//! gradients of the evaluator's scalar output, both for the evaluator's own
//! parameters and, through the frozen evaluator, for the generator's.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cover::EdgeWeights;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::learner::nets::{EvaluatorParams, GeneratorParams, GridContext};

const BASE_STEP: f64 = 1e-6;
const DENOM_FLOOR: f64 = 1e-6;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

/// Probes random parameter coordinates of the evaluator and compares the
/// analytic gradient of its estimate against central differences. Returns
/// the maximum relative error over the probes.
pub fn finite_diff_check_evaluator(
    params: &EvaluatorParams,
    weights: &EdgeWeights,
    image: &GrayImage,
    probe_count: usize,
    seed: u64,
) -> Result<f64> {
    let ctx = GridContext::new(image.size());
    if weights.len() != ctx.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", ctx.edge_count()),
            got: format!("{}", weights.len()),
        });
    }

    let mut work = params.clone();
    let enc = work.encode_batch(&ctx, &[image]);
    let head = work.head_forward(&ctx, &enc, 0, weights.values());
    let mut grads = work.zero_grads();
    let (_, d_pooled) = work.backward_head(&ctx, &head, 1.0, Some(&mut grads));
    work.backward_encoder(&ctx, &enc, &[d_pooled], &mut grads);
    let analytic: Vec<f64> = grads
        .tensors()
        .iter()
        .flat_map(|t| t.iter().copied())
        .collect();

    let forward = |p: &EvaluatorParams| -> f64 {
        let enc = p.encode_batch(&ctx, &[image]);
        p.head_forward(&ctx, &enc, 0, weights.values()).out
    };
    let total: usize = analytic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..probe_count {
        let coord = rng.gen_range(0..total);
        let numeric = {
            let (t, o) = locate(&mut work.tensors_mut(), coord);
            central_diff(&mut work, t, o, &forward)
        };
        max_err = max_err.max(relative_error(analytic[coord], numeric));
    }
    Ok(max_err)
}

/// Same audit for the generator: the scalar is the frozen evaluator's
/// estimate of the generator's weights for one image, i.e. the exact
/// gradient path of the generator training step.
pub fn finite_diff_check_generator(
    generator: &GeneratorParams,
    evaluator: &EvaluatorParams,
    image: &GrayImage,
    probe_count: usize,
    seed: u64,
) -> Result<f64> {
    let ctx = GridContext::new(image.size());
    let mut work = generator.clone();

    let (w_all, gen_cache) = work.forward_batch(&ctx, &[image]);
    let enc = evaluator.encode_batch(&ctx, &[image]);
    let head = evaluator.head_forward(&ctx, &enc, 0, &w_all[0]);
    let (d_w, _) = evaluator.backward_head(&ctx, &head, 1.0, None);
    let mut grads = work.zero_grads();
    work.backward_batch(&ctx, &gen_cache, &[d_w], &mut grads);
    let analytic: Vec<f64> = grads
        .tensors()
        .iter()
        .flat_map(|t| t.iter().copied())
        .collect();

    // The evaluator is frozen, so its image features can be reused across
    // probe evaluations.
    let forward = |p: &GeneratorParams| -> f64 {
        let (w, _) = p.forward_batch(&ctx, &[image]);
        evaluator.head_forward(&ctx, &enc, 0, &w[0]).out
    };
    let total: usize = analytic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..probe_count {
        let coord = rng.gen_range(0..total);
        let numeric = {
            let (t, o) = locate(&mut work.tensors_mut(), coord);
            central_diff(&mut work, t, o, &forward)
        };
        max_err = max_err.max(relative_error(analytic[coord], numeric));
    }
    Ok(max_err)
}

/// Maps a flat coordinate to (tensor index, offset) over the fixed tensor
/// order.
fn locate(tensors: &mut Vec<&mut Vec<f64>>, mut coord: usize) -> (usize, usize) {
    for (i, t) in tensors.iter().enumerate() {
        if coord < t.len() {
            return (i, coord);
        }
        coord -= t.len();
    }
    panic!("probe coordinate out of range");
}

/// Central difference with a step scaled to the coordinate's magnitude.
fn central_diff<P>(params: &mut P, tensor: usize, offset: usize, forward: &dyn Fn(&P) -> f64) -> f64
where
    P: HasTensors,
{
    let original = params.tensors_view()[tensor][offset];
    let step = BASE_STEP * original.abs().max(1.0);
    params.set(tensor, offset, original + step);
    let up = forward(params);
    params.set(tensor, offset, original - step);
    let down = forward(params);
    params.set(tensor, offset, original);
    (up - down) / (2.0 * step)
}

/// Minimal uniform access used by the probing loop.
pub(crate) trait HasTensors {
    fn tensors_view(&mut self) -> Vec<&mut Vec<f64>>;
    fn set(&mut self, tensor: usize, offset: usize, value: f64) {
        self.tensors_view()[tensor][offset] = value;
    }
}

impl HasTensors for EvaluatorParams {
    fn tensors_view(&mut self) -> Vec<&mut Vec<f64>> {
        self.tensors_mut()
    }
}

impl HasTensors for GeneratorParams {
    fn tensors_view(&mut self) -> Vec<&mut Vec<f64>> {
        self.tensors_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSize;
    use crate::learner::layers::Activation;
    use crate::learner::nets::NetConfig;

    fn tiny_cfg() -> NetConfig {
        NetConfig {
            feature_width: 3,
            residual_blocks: 1,
            message_blocks: 2,
        }
    }

    fn probe_image(seed: u64) -> GrayImage {
        let size = GridSize::new(8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(size, (0..64).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn linear_network_gradients_are_exact() {
        // With every nonlinearity disabled the map is linear in each
        // parameter block, so central differences are exact to rounding.
        let image = probe_image(1);
        let mut evaluator = EvaluatorParams::init(3, tiny_cfg());
        evaluator.activation = Activation::Identity;
        evaluator.sigmoid_head = false;
        let ctx = GridContext::new(image.size());
        let weights = EdgeWeights::new(vec![0.3; ctx.edge_count()]).unwrap();
        let err = finite_diff_check_evaluator(&evaluator, &weights, &image, 60, 5).unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn default_networks_pass_the_audit() {
        let image = probe_image(2);
        let evaluator = EvaluatorParams::init(4, tiny_cfg());
        let generator = GeneratorParams::init(5, tiny_cfg());
        let ctx = GridContext::new(image.size());
        let weights = EdgeWeights::new(
            (0..ctx.edge_count()).map(|i| (i as f64 * 0.37).sin()).collect(),
        )
        .unwrap();
        let e_err = finite_diff_check_evaluator(&evaluator, &weights, &image, 100, 6).unwrap();
        assert!(e_err < 1e-4, "evaluator relative error {e_err}");
        let g_err =
            finite_diff_check_generator(&generator, &evaluator, &image, 100, 7).unwrap();
        assert!(g_err < 1e-4, "generator relative error {g_err}");
    }

    #[test]
    fn corrupted_gradient_fails_the_audit() {
        // Zeroing one analytic coordinate must blow up the comparison at
        // that coordinate; this guards the audit itself.
        let image = probe_image(3);
        let mut params = EvaluatorParams::init(6, tiny_cfg());
        let ctx = GridContext::new(image.size());
        let weights = EdgeWeights::new(vec![0.1; ctx.edge_count()]).unwrap();

        let enc = params.encode_batch(&ctx, &[&image]);
        let head = params.head_forward(&ctx, &enc, 0, weights.values());
        let mut grads = params.zero_grads();
        let (_, d_pooled) = params.backward_head(&ctx, &head, 1.0, Some(&mut grads));
        params.backward_encoder(&ctx, &enc, &[d_pooled], &mut grads);
        let analytic: Vec<f64> = grads
            .tensors()
            .iter()
            .flat_map(|t| t.iter().copied())
            .collect();
        // Pick the largest-magnitude coordinate: certainly a live path.
        let (coord, &value) = analytic
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert!(value.abs() > 1e-6);

        let forward = |p: &EvaluatorParams| -> f64 {
            let enc = p.encode_batch(&ctx, &[&image]);
            p.head_forward(&ctx, &enc, 0, weights.values()).out
        };
        let numeric = {
            let (t, o) = locate(&mut params.tensors_mut(), coord);
            central_diff(&mut params, t, o, &forward)
        };
        // The honest gradient agrees; the mutated one does not.
        assert!(relative_error(value, numeric) < 1e-4);
        let mutated = 0.0;
        assert!(relative_error(mutated, numeric) > 1e-2);
    }
}
