//! Network building blocks with hand-written backward passes: im2col
//! convolution, GCN-style message passing over a normalized adjacency,
//! dense layers and the edge pooling that moves features from the circuit
//! lattice onto dual edges.

use rand::Rng;

use crate::grid::{DualGraph, LineGraph};
use crate::learner::math::{gemm, gemm_at, gemm_bt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub(crate) fn apply(&self, x: &mut [f64]) {
        if let Activation::Relu = self {
            for v in x {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }

    /// Masks `grad` by the derivative at the pre-activation values.
    pub(crate) fn backward(&self, pre: &[f64], grad: &mut [f64]) {
        if let Activation::Relu = self {
            for (g, &p) in grad.iter_mut().zip(pre) {
                if p <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }
}

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
fn uniform_fan_in(rng: &mut impl Rng, fan_in: usize, len: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Reusable buffers for convolution forward/backward passes.
#[derive(Default)]
pub(crate) struct ConvScratch {
    cols: Vec<f64>,
    dcols: Vec<f64>,
}

fn resize_buf(buf: &mut Vec<f64>, len: usize) {
    buf.clear();
    buf.resize(len, 0.0);
}

/// 2D convolution over position-major tensors.
///
/// Activations are laid out `(batch * positions, channels)` with positions in
/// row-major spatial order; weights are `(out_ch, kh * kw * in_ch)` with the
/// input channel fastest. This keeps im2col and col2im working on contiguous
/// channel runs and makes the output directly usable as node-major features.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn init(
        rng: &mut impl Rng,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let fan_in = in_ch * kernel * kernel;
        Self {
            weight: uniform_fan_in(rng, fan_in, out_ch * fan_in),
            bias: uniform_fan_in(rng, fan_in, out_ch),
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
        }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }

    fn im2col(&self, x: &[f64], batch: usize, h: usize, w: usize, cols: &mut Vec<f64>) {
        let (ho, wo) = self.out_dims(h, w);
        let k = self.kernel;
        let ci = self.in_ch;
        let patch = k * k * ci;
        resize_buf(cols, batch * ho * wo * patch);
        for b in 0..batch {
            let xb = &x[b * h * w * ci..(b + 1) * h * w * ci];
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut idx = ((b * ho + oy) * wo + ox) * patch;
                    let iy0 = (oy * self.stride) as isize - self.pad as isize;
                    let ix0 = (ox * self.stride) as isize - self.pad as isize;
                    for ky in 0..k {
                        let iy = iy0 + ky as isize;
                        if iy < 0 || iy >= h as isize {
                            idx += k * ci;
                            continue;
                        }
                        let row = iy as usize * w;
                        for kx in 0..k {
                            let ix = ix0 + kx as isize;
                            if ix >= 0 && ix < w as isize {
                                let src = (row + ix as usize) * ci;
                                cols[idx..idx + ci].copy_from_slice(&xb[src..src + ci]);
                            }
                            idx += ci;
                        }
                    }
                }
            }
        }
    }

    /// x is `(batch * h * w, in_ch)`; returns `(batch * ho * wo, out_ch)`.
    pub(crate) fn forward(
        &self,
        x: &[f64],
        batch: usize,
        h: usize,
        w: usize,
        scratch: &mut ConvScratch,
    ) -> Vec<f64> {
        let (ho, wo) = self.out_dims(h, w);
        let rows = batch * ho * wo;
        let patch = self.in_ch * self.kernel * self.kernel;
        self.im2col(x, batch, h, w, &mut scratch.cols);
        let mut y = vec![0.0; rows * self.out_ch];
        gemm_bt(rows, patch, self.out_ch, 1.0, &scratch.cols, &self.weight, 0.0, &mut y);
        for r in 0..rows {
            let row = &mut y[r * self.out_ch..(r + 1) * self.out_ch];
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        y
    }

    /// Accumulates parameter gradients and returns the input gradient. The
    /// im2col matrix is rebuilt from `x` rather than cached.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        x: &[f64],
        batch: usize,
        h: usize,
        w: usize,
        dy: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
        scratch: &mut ConvScratch,
    ) -> Vec<f64> {
        let (ho, wo) = self.out_dims(h, w);
        let rows = batch * ho * wo;
        let patch = self.in_ch * self.kernel * self.kernel;
        self.im2col(x, batch, h, w, &mut scratch.cols);

        for r in 0..rows {
            let row = &dy[r * self.out_ch..(r + 1) * self.out_ch];
            for (g, &v) in db.iter_mut().zip(row) {
                *g += v;
            }
        }
        // dW (out_ch, patch) += dy^T * cols
        gemm_at(self.out_ch, rows, patch, 1.0, dy, &scratch.cols, 1.0, dw);
        // dcols (rows, patch) = dy * weight
        resize_buf(&mut scratch.dcols, rows * patch);
        let dcols = &mut scratch.dcols;
        gemm(rows, self.out_ch, patch, 1.0, dy, &self.weight, 0.0, dcols);

        // col2im scatter-add over contiguous channel runs.
        let mut dx = vec![0.0; batch * h * w * self.in_ch];
        let k = self.kernel;
        let ci = self.in_ch;
        for b in 0..batch {
            let xb = b * h * w * ci;
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut idx = ((b * ho + oy) * wo + ox) * patch;
                    let iy0 = (oy * self.stride) as isize - self.pad as isize;
                    let ix0 = (ox * self.stride) as isize - self.pad as isize;
                    for ky in 0..k {
                        let iy = iy0 + ky as isize;
                        if iy < 0 || iy >= h as isize {
                            idx += k * ci;
                            continue;
                        }
                        let row = iy as usize * w;
                        for kx in 0..k {
                            let ix = ix0 + kx as isize;
                            if ix >= 0 && ix < w as isize {
                                let dst = xb + (row + ix as usize) * ci;
                                for c in 0..ci {
                                    dx[dst + c] += dcols[idx + c];
                                }
                            }
                            idx += ci;
                        }
                    }
                }
            }
        }
        dx
    }

    pub(crate) fn zeros_like(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.weight.len()], vec![0.0; self.bias.len()])
    }
}

/// Dense layer, weights `(in, out)` row-major.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn init(rng: &mut impl Rng, d_in: usize, d_out: usize) -> Self {
        Self {
            weight: uniform_fan_in(rng, d_in, d_in * d_out),
            bias: uniform_fan_in(rng, d_in, d_out),
            d_in,
            d_out,
        }
    }

    /// x is `(rows, d_in)`.
    pub(crate) fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * self.d_out];
        gemm(rows, self.d_in, self.d_out, 1.0, x, &self.weight, 0.0, &mut y);
        for r in 0..rows {
            for c in 0..self.d_out {
                y[r * self.d_out + c] += self.bias[c];
            }
        }
        y
    }

    pub(crate) fn backward(
        &self,
        x: &[f64],
        rows: usize,
        dy: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
    ) -> Vec<f64> {
        gemm_at(self.d_in, rows, self.d_out, 1.0, x, dy, 1.0, dw);
        for r in 0..rows {
            for c in 0..self.d_out {
                db[c] += dy[r * self.d_out + c];
            }
        }
        self.backward_data(rows, dy)
    }

    /// Input gradient only, for frozen-parameter passes.
    pub(crate) fn backward_data(&self, rows: usize, dy: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; rows * self.d_in];
        gemm_bt(rows, self.d_out, self.d_in, 1.0, dy, &self.weight, 0.0, &mut dx);
        dx
    }
}

/// Symmetrically normalized adjacency with self-loops,
/// `D^-1/2 (A + I) D^-1/2`, in CSR form. Symmetric, so it is its own
/// transpose in backward passes.
#[derive(Clone, Debug)]
pub struct NormAdj {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl NormAdj {
    pub fn from_line_graph(lg: &LineGraph) -> Self {
        let n = lg.node_count();
        let mut neighbors = lg.neighbor_lists();
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.push(i);
            list.sort_unstable();
        }
        let inv_sqrt_deg: Vec<f64> = neighbors
            .iter()
            .map(|l| 1.0 / (l.len() as f64).sqrt())
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                col.push(j);
                val.push(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
            }
            row_ptr.push(col.len());
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// y = A_hat x with x, y of shape (n, d).
    pub(crate) fn mul(&self, x: &[f64], d: usize, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n * d);
        debug_assert_eq!(y.len(), self.n * d);
        y.fill(0.0);
        for i in 0..self.n {
            let yi = &mut y[i * d..(i + 1) * d];
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, a) = (self.col[idx], self.val[idx]);
                let xj = &x[j * d..(j + 1) * d];
                for (yv, &xv) in yi.iter_mut().zip(xj) {
                    *yv += a * xv;
                }
            }
        }
    }

    /// Dense copy, for oracle comparisons in tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i * self.n + self.col[idx]] = self.val[idx];
            }
        }
        out
    }
}

/// One message-passing block: `h' = sigma(A_hat (h W + b))`.
#[derive(Clone, Debug)]
pub struct Gcn {
    pub linear: Linear,
}

pub(crate) struct GcnCache {
    /// Pre-aggregation linear output, (n, d_out).
    lin_out: Vec<f64>,
    /// Pre-activation aggregated output, (n, d_out).
    pre_act: Vec<f64>,
}

impl Gcn {
    pub fn init(rng: &mut impl Rng, d_in: usize, d_out: usize) -> Self {
        Self {
            linear: Linear::init(rng, d_in, d_out),
        }
    }

    pub(crate) fn forward(
        &self,
        adj: &NormAdj,
        x: &[f64],
        activation: Activation,
    ) -> (Vec<f64>, GcnCache) {
        let n = adj.node_count();
        let lin_out = self.linear.forward(x, n);
        let mut pre_act = vec![0.0; lin_out.len()];
        adj.mul(&lin_out, self.linear.d_out, &mut pre_act);
        let mut y = pre_act.clone();
        activation.apply(&mut y);
        (y, GcnCache { lin_out, pre_act })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        adj: &NormAdj,
        x: &[f64],
        cache: &GcnCache,
        activation: Activation,
        dy: &[f64],
        params: Option<(&mut [f64], &mut [f64])>,
    ) -> Vec<f64> {
        let n = adj.node_count();
        let mut dpre = dy.to_vec();
        activation.backward(&cache.pre_act, &mut dpre);
        // d(lin_out) = A_hat^T dpre = A_hat dpre.
        let mut dlin = vec![0.0; cache.lin_out.len()];
        adj.mul(&dpre, self.linear.d_out, &mut dlin);
        match params {
            Some((dw, db)) => self.linear.backward(x, n, &dlin, dw, db),
            None => self.linear.backward_data(n, &dlin),
        }
    }
}

/// Mean-pools circuit-lattice features onto dual edges: every edge takes the
/// average of its two endpoint circuits (the 1x2 filter for horizontal
/// edges, the 2x1 filter for vertical ones).
///
/// `vertex_features` is node-major `(circuit_count, d)`; the result is
/// `(edge_count, d)` in canonical dual-edge order.
pub fn pool_edge_features(dual: &DualGraph, vertex_features: &[f64], d: usize) -> Vec<f64> {
    debug_assert_eq!(vertex_features.len(), dual.vertex_count() * d);
    let mut out = vec![0.0; dual.edge_count() * d];
    for (i, &(a, b)) in dual.edges().iter().enumerate() {
        let fa = &vertex_features[a.0 * d..(a.0 + 1) * d];
        let fb = &vertex_features[b.0 * d..(b.0 + 1) * d];
        let o = &mut out[i * d..(i + 1) * d];
        for ((ov, &x), &y) in o.iter_mut().zip(fa).zip(fb) {
            *ov = 0.5 * (x + y);
        }
    }
    out
}

/// Adjoint of [`pool_edge_features`].
pub(crate) fn pool_edge_features_backward(
    dual: &DualGraph,
    d_edges: &[f64],
    d: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; dual.vertex_count() * d];
    for (i, &(a, b)) in dual.edges().iter().enumerate() {
        let de = &d_edges[i * d..(i + 1) * d];
        for (f, &g) in de.iter().enumerate() {
            out[a.0 * d + f] += 0.5 * g;
            out[b.0 * d + f] += 0.5 * g;
        }
    }
    out
}
