//! The weight generator and weight evaluator networks.
//!
//! Both share the same encoder shape: a 2x2 stride-2 convolution onto the
//! circuit lattice, a stack of residual blocks, then mean pooling of the two
//! endpoint circuits of every dual edge. The generator regresses one scalar
//! per line-graph node through GCN blocks; the evaluator concatenates the
//! batch-mean weights onto the pooled features, runs its own GCN stack,
//! average-pools over nodes and finishes with a two-layer head and a sigmoid
//! so its estimate lives in (0, 1) like the normalized objectives.
//!
//! Forward and backward passes run convolutions over whole minibatches; the
//! graph stages stay per image since their cost is negligible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cover::EdgeWeights;
use crate::error::{Error, Result};
use crate::grid::{self, DualGraph, GridSize, LineGraph};
use crate::image::GrayImage;
use crate::learner::layers::{
    pool_edge_features, pool_edge_features_backward, Activation, Conv2d, ConvScratch, Gcn,
    GcnCache, Linear, NormAdj,
};

/// Elementwise mean of per-image weight vectors; the single weight vector an
/// image set shares.
pub type BatchMeanWeights = EdgeWeights;

/// Architecture hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct NetConfig {
    /// Feature width d.
    pub feature_width: usize,
    /// Residual block count m1.
    pub residual_blocks: usize,
    /// Message-passing block count m2.
    pub message_blocks: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            feature_width: 32,
            residual_blocks: 8,
            message_blocks: 6,
        }
    }
}

/// Precomputed topology for one grid size, shared across forward passes.
#[derive(Clone, Debug)]
pub struct GridContext {
    size: GridSize,
    dual: DualGraph,
    line_graph: LineGraph,
    pub(crate) adj: NormAdj,
}

impl GridContext {
    pub fn new(size: GridSize) -> Self {
        let dual = grid::build_dual(size);
        let line_graph = grid::build_line_graph(&dual);
        let adj = NormAdj::from_line_graph(&line_graph);
        Self {
            size,
            dual,
            line_graph,
            adj,
        }
    }

    pub fn size(&self) -> GridSize {
        self.size
    }

    pub fn dual(&self) -> &DualGraph {
        &self.dual
    }

    pub fn line_graph(&self) -> &LineGraph {
        &self.line_graph
    }

    pub fn edge_count(&self) -> usize {
        self.dual.edge_count()
    }
}

/// One message-passing block applied to explicit node features; the building
/// block the regressors are made of, exposed for direct use and testing.
pub fn message_passing(
    line_graph: &LineGraph,
    features: &[f64],
    layer: &Gcn,
    activation: Activation,
) -> Result<Vec<f64>> {
    let n = line_graph.node_count();
    if n * layer.linear.d_in != features.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features", n * layer.linear.d_in),
            got: format!("{}", features.len()),
        });
    }
    let adj = NormAdj::from_line_graph(line_graph);
    Ok(layer.forward(&adj, features, activation).0)
}

/// Shared encoder: stem conv then residual blocks `x + conv3x3(relu(x))`.
#[derive(Clone, Debug)]
pub struct Encoder {
    pub stem: Conv2d,
    pub blocks: Vec<Conv2d>,
}

pub(crate) struct EncoderCache {
    batch: usize,
    /// Stacked input images, (batch, 1, H, W).
    input: Vec<f64>,
    /// Per block: the block input (batch, d, ch, cw), pre-activation.
    block_inputs: Vec<Vec<f64>>,
    /// Pooled per-edge features per image, each (ne, d).
    pub(crate) pooled: Vec<Vec<f64>>,
}

pub(crate) struct EncoderGrads {
    pub stem_w: Vec<f64>,
    pub stem_b: Vec<f64>,
    pub blocks: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Encoder {
    fn init(rng: &mut impl Rng, cfg: &NetConfig) -> Self {
        let stem = Conv2d::init(rng, 1, cfg.feature_width, 2, 2, 0);
        let blocks = (0..cfg.residual_blocks)
            .map(|_| Conv2d::init(rng, cfg.feature_width, cfg.feature_width, 3, 1, 1))
            .collect();
        Self { stem, blocks }
    }

    fn zero_grads(&self) -> EncoderGrads {
        let (stem_w, stem_b) = self.stem.zeros_like();
        EncoderGrads {
            stem_w,
            stem_b,
            blocks: self.blocks.iter().map(|b| b.zeros_like()).collect(),
        }
    }

    /// Runs the conv stack on a batch of images and pools per-image features
    /// onto dual edges.
    fn forward(
        &self,
        ctx: &GridContext,
        images: &[&GrayImage],
        activation: Activation,
        scratch: &mut ConvScratch,
    ) -> EncoderCache {
        let (h, w) = (ctx.size.height(), ctx.size.width());
        let batch = images.len();
        let d = self.stem.out_ch;
        let nodes = ctx.dual.vertex_count();
        let (ch, cw) = ctx.size.circuit_dims();

        let mut input = Vec::with_capacity(batch * h * w);
        for im in images {
            input.extend_from_slice(im.data());
        }
        let mut x = self.stem.forward(&input, batch, h, w, scratch);
        let mut block_inputs = Vec::with_capacity(self.blocks.len());
        for conv in &self.blocks {
            let mut r = x.clone();
            activation.apply(&mut r);
            let mut y = conv.forward(&r, batch, ch, cw, scratch);
            // y = pre + conv(relu(pre)); keep pre for the backward pass.
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += xi;
            }
            block_inputs.push(std::mem::replace(&mut x, y));
        }
        // Position-major features are node-major per image already.
        let per_image = d * nodes;
        let pooled = (0..batch)
            .map(|b| pool_edge_features(&ctx.dual, &x[b * per_image..(b + 1) * per_image], d))
            .collect();
        EncoderCache {
            batch,
            input,
            block_inputs,
            pooled,
        }
    }

    /// Backpropagates gradients on the pooled edge features (one slice per
    /// image; empty slices are treated as zero).
    fn backward(
        &self,
        ctx: &GridContext,
        cache: &EncoderCache,
        d_pooled: &[Vec<f64>],
        activation: Activation,
        grads: &mut EncoderGrads,
        scratch: &mut ConvScratch,
    ) {
        let batch = cache.batch;
        debug_assert_eq!(d_pooled.len(), batch);
        let d = self.stem.out_ch;
        let nodes = ctx.dual.vertex_count();
        let (ch, cw) = ctx.size.circuit_dims();
        let per_image = d * nodes;

        let mut dx = vec![0.0; batch * per_image];
        for (b, dp) in d_pooled.iter().enumerate() {
            if dp.is_empty() {
                continue;
            }
            let d_nodes = pool_edge_features_backward(&ctx.dual, dp, d);
            dx[b * per_image..(b + 1) * per_image].copy_from_slice(&d_nodes);
        }
        for (i, conv) in self.blocks.iter().enumerate().rev() {
            let pre = &cache.block_inputs[i];
            let mut r = pre.clone();
            activation.apply(&mut r);
            let (dw, db) = &mut grads.blocks[i];
            let mut dr = conv.backward(&r, batch, ch, cw, &dx, dw, db, scratch);
            activation.backward(pre, &mut dr);
            for (xi, ri) in dx.iter_mut().zip(&dr) {
                *xi += ri;
            }
        }
        // Stem input gradient is discarded; only parameters matter.
        let (h, w) = (ctx.size.height(), ctx.size.width());
        let _ = self.stem.backward(
            &cache.input,
            batch,
            h,
            w,
            &dx,
            &mut grads.stem_w,
            &mut grads.stem_b,
            scratch,
        );
    }
}

/// Weight generator parameters: encoder plus per-node scalar regressor.
#[derive(Clone, Debug)]
pub struct GeneratorParams {
    pub enc: Encoder,
    pub gcn: Vec<Gcn>,
    pub config: NetConfig,
    pub(crate) activation: Activation,
}

pub(crate) struct GeneratorGrads {
    pub enc: EncoderGrads,
    pub gcn: Vec<(Vec<f64>, Vec<f64>)>,
}

pub(crate) struct GeneratorCache {
    enc: EncoderCache,
    /// Per image, per GCN layer: input features and forward cache.
    gcn: Vec<Vec<(Vec<f64>, GcnCache)>>,
}

impl GeneratorParams {
    pub fn init(seed: u64, cfg: NetConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = Encoder::init(&mut rng, &cfg);
        let d = cfg.feature_width;
        let mut gcn = Vec::with_capacity(cfg.message_blocks);
        for i in 0..cfg.message_blocks {
            let (d_in, d_out) = if i + 1 == cfg.message_blocks {
                (d, 1)
            } else {
                (d, d)
            };
            let mut layer = Gcn::init(&mut rng, d_in, d_out);
            if i + 1 == cfg.message_blocks {
                // Start the scalar head small so initial weights sit near
                // zero and the MST tie-break provides a sane initial order.
                for v in layer.linear.weight.iter_mut() {
                    *v *= 0.1;
                }
                layer.linear.bias.fill(0.0);
            }
            gcn.push(layer);
        }
        Self {
            enc,
            gcn,
            config: cfg,
            activation: Activation::Relu,
        }
    }

    pub(crate) fn zero_grads(&self) -> GeneratorGrads {
        GeneratorGrads {
            enc: self.enc.zero_grads(),
            gcn: self
                .gcn
                .iter()
                .map(|g| {
                    (
                        vec![0.0; g.linear.weight.len()],
                        vec![0.0; g.linear.bias.len()],
                    )
                })
                .collect(),
        }
    }

    fn layer_activation(&self, i: usize) -> Activation {
        if i + 1 == self.gcn.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }

    /// Per-image weight vectors for a batch.
    pub(crate) fn forward_batch(
        &self,
        ctx: &GridContext,
        images: &[&GrayImage],
    ) -> (Vec<Vec<f64>>, GeneratorCache) {
        self.forward_batch_with(ctx, images, &mut ConvScratch::default())
    }

    pub(crate) fn forward_batch_with(
        &self,
        ctx: &GridContext,
        images: &[&GrayImage],
        scratch: &mut ConvScratch,
    ) -> (Vec<Vec<f64>>, GeneratorCache) {
        let enc = self.enc.forward(ctx, images, self.activation, scratch);
        let mut weights = Vec::with_capacity(images.len());
        let mut gcn_all = Vec::with_capacity(images.len());
        for pooled in &enc.pooled {
            let mut x = pooled.clone();
            let mut caches = Vec::with_capacity(self.gcn.len());
            for (i, layer) in self.gcn.iter().enumerate() {
                let (y, cache) = layer.forward(&ctx.adj, &x, self.layer_activation(i));
                caches.push((std::mem::replace(&mut x, y), cache));
            }
            weights.push(x);
            gcn_all.push(caches);
        }
        (weights, GeneratorCache { enc, gcn: gcn_all })
    }

    /// Backward over the whole batch; `d_weights[b]` is the gradient on
    /// image b's weight vector.
    pub(crate) fn backward_batch(
        &self,
        ctx: &GridContext,
        cache: &GeneratorCache,
        d_weights: &[Vec<f64>],
        grads: &mut GeneratorGrads,
    ) {
        self.backward_batch_with(ctx, cache, d_weights, grads, &mut ConvScratch::default())
    }

    pub(crate) fn backward_batch_with(
        &self,
        ctx: &GridContext,
        cache: &GeneratorCache,
        d_weights: &[Vec<f64>],
        grads: &mut GeneratorGrads,
        scratch: &mut ConvScratch,
    ) {
        let mut d_pooled = Vec::with_capacity(d_weights.len());
        for (b, dw_img) in d_weights.iter().enumerate() {
            let mut dy = dw_img.clone();
            for (i, layer) in self.gcn.iter().enumerate().rev() {
                let (x, gcn_cache) = &cache.gcn[b][i];
                let (dw, db) = &mut grads.gcn[i];
                dy = layer.backward(
                    &ctx.adj,
                    x,
                    gcn_cache,
                    self.layer_activation(i),
                    &dy,
                    Some((dw, db)),
                );
            }
            d_pooled.push(dy);
        }
        self.enc.backward(
            ctx,
            &cache.enc,
            &d_pooled,
            self.activation,
            &mut grads.enc,
            scratch,
        );
    }

    /// Tensors in a fixed order, shared by the optimizer, the checkpoint
    /// format and the gradient audit.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        let d = self.config.feature_width;
        out.push((
            "enc.stem.weight".into(),
            vec![d, 2, 2, 1],
            &self.enc.stem.weight,
        ));
        out.push(("enc.stem.bias".into(), vec![d], &self.enc.stem.bias));
        for (i, b) in self.enc.blocks.iter().enumerate() {
            out.push((format!("enc.block{i}.weight"), vec![d, 3, 3, d], &b.weight));
            out.push((format!("enc.block{i}.bias"), vec![d], &b.bias));
        }
        for (i, g) in self.gcn.iter().enumerate() {
            out.push((
                format!("gcn{i}.weight"),
                vec![g.linear.d_in, g.linear.d_out],
                &g.linear.weight,
            ));
            out.push((format!("gcn{i}.bias"), vec![g.linear.d_out], &g.linear.bias));
        }
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        out.push(&mut self.enc.stem.weight);
        out.push(&mut self.enc.stem.bias);
        for b in self.enc.blocks.iter_mut() {
            out.push(&mut b.weight);
            out.push(&mut b.bias);
        }
        for g in self.gcn.iter_mut() {
            out.push(&mut g.linear.weight);
            out.push(&mut g.linear.bias);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, t)| t.len()).sum()
    }
}

impl GeneratorGrads {
    pub(crate) fn zero(&mut self) {
        self.enc.stem_w.fill(0.0);
        self.enc.stem_b.fill(0.0);
        for (w, b) in &mut self.enc.blocks {
            w.fill(0.0);
            b.fill(0.0);
        }
        for (w, b) in &mut self.gcn {
            w.fill(0.0);
            b.fill(0.0);
        }
    }

    pub(crate) fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.push(&self.enc.stem_w);
        out.push(&self.enc.stem_b);
        for (w, b) in &self.enc.blocks {
            out.push(w);
            out.push(b);
        }
        for (w, b) in &self.gcn {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// Weight evaluator parameters: encoder, GCN stack over pooled features
/// concatenated with the batch-mean weights, global average pool, two-layer
/// head with a sigmoid output.
#[derive(Clone, Debug)]
pub struct EvaluatorParams {
    pub enc: Encoder,
    pub gcn: Vec<Gcn>,
    pub head1: Linear,
    pub head2: Linear,
    pub config: NetConfig,
    pub(crate) activation: Activation,
    pub(crate) sigmoid_head: bool,
}

pub(crate) struct EvaluatorGrads {
    pub enc: EncoderGrads,
    pub gcn: Vec<(Vec<f64>, Vec<f64>)>,
    pub head1: (Vec<f64>, Vec<f64>),
    pub head2: (Vec<f64>, Vec<f64>),
}

/// Image-dependent state for a batch, reusable across head evaluations with
/// different weight vectors while the evaluator parameters stay fixed.
pub(crate) struct EvalEncCache {
    enc: EncoderCache,
}

pub(crate) struct EvalHeadCache {
    /// Per GCN layer: input features (the first layer's input is the
    /// weight/feature concat) and forward cache.
    gcn: Vec<(Vec<f64>, GcnCache)>,
    /// Node-mean pooled features (d).
    pooled_mean: Vec<f64>,
    h1_pre: Vec<f64>,
    h1: Vec<f64>,
    pub(crate) out: f64,
}

impl EvaluatorParams {
    pub fn init(seed: u64, cfg: NetConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = Encoder::init(&mut rng, &cfg);
        let d = cfg.feature_width;
        let mut gcn = Vec::with_capacity(cfg.message_blocks);
        for i in 0..cfg.message_blocks {
            let d_in = if i == 0 { d + 1 } else { d };
            gcn.push(Gcn::init(&mut rng, d_in, d));
        }
        let head1 = Linear::init(&mut rng, d, d);
        let head2 = Linear::init(&mut rng, d, 1);
        Self {
            enc,
            gcn,
            head1,
            head2,
            config: cfg,
            activation: Activation::Relu,
            sigmoid_head: true,
        }
    }

    pub(crate) fn zero_grads(&self) -> EvaluatorGrads {
        EvaluatorGrads {
            enc: self.enc.zero_grads(),
            gcn: self
                .gcn
                .iter()
                .map(|g| {
                    (
                        vec![0.0; g.linear.weight.len()],
                        vec![0.0; g.linear.bias.len()],
                    )
                })
                .collect(),
            head1: (
                vec![0.0; self.head1.weight.len()],
                vec![0.0; self.head1.bias.len()],
            ),
            head2: (
                vec![0.0; self.head2.weight.len()],
                vec![0.0; self.head2.bias.len()],
            ),
        }
    }

    pub(crate) fn encode_batch(&self, ctx: &GridContext, images: &[&GrayImage]) -> EvalEncCache {
        self.encode_batch_with(ctx, images, &mut ConvScratch::default())
    }

    pub(crate) fn encode_batch_with(
        &self,
        ctx: &GridContext,
        images: &[&GrayImage],
        scratch: &mut ConvScratch,
    ) -> EvalEncCache {
        EvalEncCache {
            enc: self.enc.forward(ctx, images, self.activation, scratch),
        }
    }

    /// Estimate for image `index` of the encoded batch under `weights`.
    pub(crate) fn head_forward(
        &self,
        ctx: &GridContext,
        enc: &EvalEncCache,
        index: usize,
        weights: &[f64],
    ) -> EvalHeadCache {
        let d = self.config.feature_width;
        let ne = ctx.edge_count();
        debug_assert_eq!(weights.len(), ne);
        let pooled = &enc.enc.pooled[index];
        let mut x0 = vec![0.0; ne * (d + 1)];
        for e in 0..ne {
            x0[e * (d + 1)] = weights[e];
            x0[e * (d + 1) + 1..(e + 1) * (d + 1)].copy_from_slice(&pooled[e * d..(e + 1) * d]);
        }
        let mut x = x0;
        let mut gcn_caches = Vec::with_capacity(self.gcn.len());
        for layer in &self.gcn {
            let (y, cache) = layer.forward(&ctx.adj, &x, self.activation);
            gcn_caches.push((std::mem::replace(&mut x, y), cache));
        }
        let mut pooled_mean = vec![0.0; d];
        if ne > 0 {
            for e in 0..ne {
                for f in 0..d {
                    pooled_mean[f] += x[e * d + f];
                }
            }
            let inv = 1.0 / ne as f64;
            pooled_mean.iter_mut().for_each(|v| *v *= inv);
        }
        let h1_pre = self.head1.forward(&pooled_mean, 1);
        let mut h1 = h1_pre.clone();
        self.activation.apply(&mut h1);
        let out_pre = self.head2.forward(&h1, 1)[0];
        let out = if self.sigmoid_head {
            1.0 / (1.0 + (-out_pre).exp())
        } else {
            out_pre
        };
        EvalHeadCache {
            gcn: gcn_caches,
            pooled_mean,
            h1_pre,
            h1,
            out,
        }
    }

    /// Backward through the head and GCN stack for one image. Returns the
    /// gradient on the input weight vector and on the pooled image features
    /// (the latter feeds [`Self::backward_encoder`]). Head and GCN parameter
    /// gradients are accumulated only when `grads` is given.
    pub(crate) fn backward_head(
        &self,
        ctx: &GridContext,
        head: &EvalHeadCache,
        d_out: f64,
        mut grads: Option<&mut EvaluatorGrads>,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = self.config.feature_width;
        let ne = ctx.edge_count();
        let d_pre = if self.sigmoid_head {
            d_out * head.out * (1.0 - head.out)
        } else {
            d_out
        };

        let mut scratch_h2 = (
            vec![0.0; self.head2.weight.len()],
            vec![0.0; self.head2.bias.len()],
        );
        let mut scratch_h1 = (
            vec![0.0; self.head1.weight.len()],
            vec![0.0; self.head1.bias.len()],
        );
        let (h2w, h2b) = match grads.as_deref_mut() {
            Some(g) => (&mut g.head2.0, &mut g.head2.1),
            None => (&mut scratch_h2.0, &mut scratch_h2.1),
        };
        let mut dh1 = self.head2.backward(&head.h1, 1, &[d_pre], h2w, h2b);
        self.activation.backward(&head.h1_pre, &mut dh1);
        let (h1w, h1b) = match grads.as_deref_mut() {
            Some(g) => (&mut g.head1.0, &mut g.head1.1),
            None => (&mut scratch_h1.0, &mut scratch_h1.1),
        };
        let d_mean = self.head1.backward(&head.pooled_mean, 1, &dh1, h1w, h1b);

        let mut dy = vec![0.0; ne * d];
        if ne > 0 {
            let inv = 1.0 / ne as f64;
            for e in 0..ne {
                for f in 0..d {
                    dy[e * d + f] = d_mean[f] * inv;
                }
            }
        }
        for (i, layer) in self.gcn.iter().enumerate().rev() {
            let (x, cache) = &head.gcn[i];
            let params = grads.as_deref_mut().map(|g| {
                let (w, b) = &mut g.gcn[i];
                (&mut w[..], &mut b[..])
            });
            dy = layer.backward(&ctx.adj, x, cache, self.activation, &dy, params);
        }
        // Split the concat gradient: column 0 is the weight vector, the rest
        // are pooled image features.
        let mut d_weights = vec![0.0; ne];
        let mut d_pooled = vec![0.0; ne * d];
        for e in 0..ne {
            d_weights[e] = dy[e * (d + 1)];
            d_pooled[e * d..(e + 1) * d].copy_from_slice(&dy[e * (d + 1) + 1..(e + 1) * (d + 1)]);
        }
        (d_weights, d_pooled)
    }

    /// Batched encoder backward from per-image pooled-feature gradients.
    pub(crate) fn backward_encoder(
        &self,
        ctx: &GridContext,
        enc: &EvalEncCache,
        d_pooled: &[Vec<f64>],
        grads: &mut EvaluatorGrads,
    ) {
        self.backward_encoder_with(ctx, enc, d_pooled, grads, &mut ConvScratch::default())
    }

    pub(crate) fn backward_encoder_with(
        &self,
        ctx: &GridContext,
        enc: &EvalEncCache,
        d_pooled: &[Vec<f64>],
        grads: &mut EvaluatorGrads,
        scratch: &mut ConvScratch,
    ) {
        self.enc.backward(
            ctx,
            &enc.enc,
            d_pooled,
            self.activation,
            &mut grads.enc,
            scratch,
        );
    }

    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        let d = self.config.feature_width;
        out.push((
            "enc.stem.weight".into(),
            vec![d, 2, 2, 1],
            &self.enc.stem.weight,
        ));
        out.push(("enc.stem.bias".into(), vec![d], &self.enc.stem.bias));
        for (i, b) in self.enc.blocks.iter().enumerate() {
            out.push((format!("enc.block{i}.weight"), vec![d, 3, 3, d], &b.weight));
            out.push((format!("enc.block{i}.bias"), vec![d], &b.bias));
        }
        for (i, g) in self.gcn.iter().enumerate() {
            out.push((
                format!("gcn{i}.weight"),
                vec![g.linear.d_in, g.linear.d_out],
                &g.linear.weight,
            ));
            out.push((format!("gcn{i}.bias"), vec![g.linear.d_out], &g.linear.bias));
        }
        out.push(("head1.weight".into(), vec![d, d], &self.head1.weight));
        out.push(("head1.bias".into(), vec![d], &self.head1.bias));
        out.push(("head2.weight".into(), vec![d, 1], &self.head2.weight));
        out.push(("head2.bias".into(), vec![1], &self.head2.bias));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        out.push(&mut self.enc.stem.weight);
        out.push(&mut self.enc.stem.bias);
        for b in self.enc.blocks.iter_mut() {
            out.push(&mut b.weight);
            out.push(&mut b.bias);
        }
        for g in self.gcn.iter_mut() {
            out.push(&mut g.linear.weight);
            out.push(&mut g.linear.bias);
        }
        out.push(&mut self.head1.weight);
        out.push(&mut self.head1.bias);
        out.push(&mut self.head2.weight);
        out.push(&mut self.head2.bias);
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, t)| t.len()).sum()
    }
}

impl EvaluatorGrads {
    pub(crate) fn zero(&mut self) {
        self.enc.stem_w.fill(0.0);
        self.enc.stem_b.fill(0.0);
        for (w, b) in &mut self.enc.blocks {
            w.fill(0.0);
            b.fill(0.0);
        }
        for (w, b) in &mut self.gcn {
            w.fill(0.0);
            b.fill(0.0);
        }
        self.head1.0.fill(0.0);
        self.head1.1.fill(0.0);
        self.head2.0.fill(0.0);
        self.head2.1.fill(0.0);
    }

    pub(crate) fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.push(&self.enc.stem_w);
        out.push(&self.enc.stem_b);
        for (w, b) in &self.enc.blocks {
            out.push(w);
            out.push(b);
        }
        for (w, b) in &self.gcn {
            out.push(w);
            out.push(b);
        }
        out.push(&self.head1.0);
        out.push(&self.head1.1);
        out.push(&self.head2.0);
        out.push(&self.head2.1);
        out
    }
}

/// One finite weight per dual edge from a single image; deterministic given
/// the parameters.
pub fn generate(image: &GrayImage, params: &GeneratorParams) -> Result<EdgeWeights> {
    let ctx = GridContext::new(image.size());
    generate_with_context(&ctx, image, params)
}

pub fn generate_with_context(
    ctx: &GridContext,
    image: &GrayImage,
    params: &GeneratorParams,
) -> Result<EdgeWeights> {
    if ctx.size() != image.size() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", ctx.size().height(), ctx.size().width()),
            got: format!("{}x{}", image.size().height(), image.size().width()),
        });
    }
    let (mut w, _) = params.forward_batch(ctx, &[image]);
    EdgeWeights::new(w.swap_remove(0))
}

/// The evaluator's estimate of the normalized objective for `(wbar, image)`,
/// strictly inside (0, 1).
pub fn evaluate(
    wbar: &BatchMeanWeights,
    image: &GrayImage,
    params: &EvaluatorParams,
) -> Result<f64> {
    let ctx = GridContext::new(image.size());
    if wbar.len() != ctx.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", ctx.edge_count()),
            got: format!("{}", wbar.len()),
        });
    }
    let enc = params.encode_batch(&ctx, &[image]);
    let head = params.head_forward(&ctx, &enc, 0, wbar.values());
    Ok(head.out)
}

/// Mean squared error of the evaluator over `(wbar, image, ground truth)`
/// triples.
pub fn evaluator_loss(
    params: &EvaluatorParams,
    items: &[(&BatchMeanWeights, &GrayImage, f64)],
) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::EmptyInput("evaluator loss batch"));
    }
    let mut total = 0.0;
    for (wbar, image, truth) in items {
        let estimate = evaluate(wbar, image, params)?;
        total += (estimate - truth) * (estimate - truth);
    }
    Ok(total / items.len() as f64)
}

/// Elementwise mean over an equal-length collection of weight vectors.
pub fn batch_mean_weights(weights: &[EdgeWeights]) -> Result<BatchMeanWeights> {
    let first = weights.first().ok_or(Error::EmptyInput("weight batch"))?;
    let len = first.len();
    if weights.iter().any(|w| w.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: format!("{len} weights each"),
            got: "mixed lengths".into(),
        });
    }
    let mut mean = vec![0.0; len];
    for w in weights {
        for (m, v) in mean.iter_mut().zip(w.values()) {
            *m += v;
        }
    }
    let inv = 1.0 / weights.len() as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    EdgeWeights::new(mean)
}
