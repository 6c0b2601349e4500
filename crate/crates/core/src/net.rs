//! The channel-charting function: a six-layer fully connected network with
//! hand-written forward/backward passes and an Adam optimizer.
//!
//! Layer `l` maps `widths[l]` to `widths[l + 1]` activations, where
//! `widths = [D', D', D'/2, D'/4, D'/8, D'/16, 2]`. Layers 1-5 use ReLU, the
//! last layer is linear. Parameters live in one flat vector: for each layer
//! the `fan_in x fan_out` weight matrix (row-major) followed by the bias.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{powf, sqrt};
use crate::rng::{stream, stream_rng};
use crate::{Point2, CHART_DIM};

pub const LAYERS: usize = 6;

/// Rows processed per chunk by [`ChartModel::predict`].
const PREDICT_CHUNK: usize = 1024;

/// Activation counts of the six layers for input dimension `input_dim`.
pub fn layer_dims(input_dim: usize) -> Result<[usize; LAYERS]> {
    let d = input_dim;
    let dims = [d, d / 2, d / 4, d / 8, d / 16, CHART_DIM];
    if dims[..LAYERS - 1].iter().any(|&w| w < CHART_DIM) {
        return Err(invalid("feature dimension too small for the layer schedule (needs D' >= 32)"));
    }
    Ok(dims)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartModel {
    widths: [usize; LAYERS + 1],
    params: Vec<f64>,
    version: u64,
}

/// Gradient with the same flat layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|g| *g *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Layer outputs retained by [`ChartModel::forward`] for the backward pass.
/// `acts[0]` is the input batch and `acts[l + 1]` the (post-ReLU) output of
/// layer `l`; a ReLU unit is active iff its output is positive.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    version: u64,
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Output of layer `layer` (0-based), row-major `batch x width`.
    pub fn layer_output(&self, layer: usize) -> &[f64] {
        &self.acts[layer + 1]
    }
}

impl ChartModel {
    /// He-normal initialization for layers 1-5, Glorot-uniform for the last
    /// layer, zero biases.
    pub fn init(input_dim: usize, seed: u64) -> Result<Self> {
        let dims = layer_dims(input_dim)?;
        let mut widths = [0; LAYERS + 1];
        widths[0] = input_dim;
        widths[1..].copy_from_slice(&dims);
        let mut model = ChartModel { widths, params: Vec::new(), version: 0 };
        model.params = vec![0.0; model.param_count()];
        let mut rng = stream_rng(seed, stream::INIT);
        for l in 0..LAYERS {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let range = model.weight_range(l);
            let w = &mut model.params[range];
            if l + 1 < LAYERS {
                let he = Normal::new(0.0, sqrt(2.0 / fan_in as f64)).map_err(|_| Error::Numerical("He init"))?;
                w.iter_mut().for_each(|v| *v = he.sample(&mut rng));
            } else {
                let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
                w.iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
            }
        }
        Ok(model)
    }

    /// Rebuilds a model from its layer widths and flat parameters.
    pub fn from_params(widths: [usize; LAYERS + 1], params: Vec<f64>) -> Result<Self> {
        if widths[LAYERS] != CHART_DIM {
            return Err(invalid("the output layer must have two units"));
        }
        if widths.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        let model = ChartModel { widths, params: Vec::new(), version: 0 };
        let expected = model.param_count();
        if params.len() != expected {
            return Err(Error::Shape { what: "model parameters", expected, found: params.len() });
        }
        Ok(ChartModel { params, ..model })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn widths(&self) -> [usize; LAYERS + 1] {
        self.widths
    }

    /// Activations per layer, `[D', D'/2, D'/4, D'/8, D'/16, D]`.
    pub fn dims(&self) -> [usize; LAYERS] {
        let mut d = [0; LAYERS];
        d.copy_from_slice(&self.widths[1..]);
        d
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameters; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        (0..LAYERS).map(|l| (self.widths[l] + 1) * self.widths[l + 1]).sum()
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| (self.widths[l] + 1) * self.widths[l + 1]).sum()
    }

    pub fn weight_range(&self, layer: usize) -> core::ops::Range<usize> {
        let start = self.layer_offset(layer);
        start..start + self.widths[layer] * self.widths[layer + 1]
    }

    pub fn bias_range(&self, layer: usize) -> core::ops::Range<usize> {
        let end = self.layer_offset(layer + 1);
        end - self.widths[layer + 1]..end
    }

    /// Runs a row-major `batch x D'` input through the network.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<Point2>, ForwardCache)> {
        let d_in = self.widths[0];
        if !input.len().is_multiple_of(d_in) {
            return Err(Error::Shape { what: "feature width", expected: d_in, found: input.len() % d_in });
        }
        let batch = input.len() / d_in;
        let mut acts = Vec::with_capacity(LAYERS + 1);
        acts.push(input.to_vec());
        for l in 0..LAYERS {
            let out = self.layer_forward(l, &acts[l], batch);
            acts.push(out);
        }
        let out = acts[LAYERS].chunks_exact(CHART_DIM).map(|r| [r[0], r[1]]).collect();
        Ok((out, ForwardCache { batch, version: self.version, acts }))
    }

    /// Forward pass without retaining activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<Point2>> {
        let d_in = self.widths[0];
        if !input.len().is_multiple_of(d_in) {
            return Err(Error::Shape { what: "feature width", expected: d_in, found: input.len() % d_in });
        }
        let mut out = Vec::with_capacity(input.len() / d_in);
        for chunk in input.chunks(PREDICT_CHUNK * d_in) {
            let batch = chunk.len() / d_in;
            let mut x = self.layer_forward(0, chunk, batch);
            for l in 1..LAYERS {
                x = self.layer_forward(l, &x, batch);
            }
            out.extend(x.chunks_exact(CHART_DIM).map(|r| [r[0], r[1]]));
        }
        Ok(out)
    }

    fn layer_forward(&self, l: usize, x: &[f64], batch: usize) -> Vec<f64> {
        let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
        let w = &self.params[self.weight_range(l)];
        let b = &self.params[self.bias_range(l)];
        let mut y = vec![0.0; batch * fan_out];
        for (xi, yi) in x.chunks_exact(fan_in).zip(y.chunks_exact_mut(fan_out)) {
            yi.copy_from_slice(b);
            for (&a, wk) in xi.iter().zip(w.chunks_exact(fan_out)) {
                if a != 0.0 {
                    axpy(a, wk, yi);
                }
            }
            if l + 1 < LAYERS {
                yi.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        y
    }

    /// Gradient of `sum_i <output_grads[i], outputs[i]>` with respect to every
    /// parameter. The ReLU derivative at zero is zero.
    pub fn backward(&self, cache: &ForwardCache, output_grads: &[Point2]) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(invalid("stale forward cache: parameters changed since the forward pass"));
        }
        if output_grads.len() != cache.batch {
            return Err(Error::Shape { what: "output gradients", expected: cache.batch, found: output_grads.len() });
        }
        let batch = cache.batch;
        let mut grads = vec![0.0; self.params.len()];
        let mut delta: Vec<f64> = output_grads.iter().flat_map(|g| g.iter().copied()).collect();
        for l in (0..LAYERS).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            if l + 1 < LAYERS {
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &cache.acts[l];
            let wr = self.weight_range(l);
            let br = self.bias_range(l);
            {
                let (gw, gb) = grads.split_at_mut(br.start);
                let gw = &mut gw[wr.clone()];
                let gb = &mut gb[..fan_out];
                for (xi, di) in x.chunks_exact(fan_in).zip(delta.chunks_exact(fan_out)) {
                    axpy(1.0, di, gb);
                    for (&a, gk) in xi.iter().zip(gw.chunks_exact_mut(fan_out)) {
                        if a != 0.0 {
                            axpy(a, di, gk);
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            // delta_in[i] = W delta[i], via the transposed weights so the inner
            // loop is a contiguous axpy.
            let w = &self.params[wr];
            let mut wt = vec![0.0; fan_in * fan_out];
            for (k, wk) in w.chunks_exact(fan_out).enumerate() {
                for (j, &v) in wk.iter().enumerate() {
                    wt[j * fan_in + k] = v;
                }
            }
            let mut next = vec![0.0; batch * fan_in];
            for (di, ni) in delta.chunks_exact(fan_out).zip(next.chunks_exact_mut(fan_in)) {
                for (&g, wj) in di.iter().zip(wt.chunks_exact(fan_in)) {
                    if g != 0.0 {
                        axpy(g, wj, ni);
                    }
                }
            }
            delta = next;
        }
        Ok(Gradients(grads))
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam moment estimates for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &ChartModel, config: AdamConfig) -> Self {
        let n = model.param_count();
        AdamState { config, first: vec![0.0; n], second: vec![0.0; n], step: 0 }
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, model: &mut ChartModel, grads: &Gradients) -> Result<()> {
        let n = model.param_count();
        if grads.0.len() != n || self.first.len() != n {
            return Err(Error::Shape { what: "gradient", expected: n, found: grads.0.len() });
        }
        self.step += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let t = self.step as f64;
        let c1 = 1.0 - powf(beta1, t);
        let c2 = 1.0 - powf(beta2, t);
        let params = model.params_mut();
        for (((p, g), m), v) in params.iter_mut().zip(&grads.0).zip(&mut self.first).zip(&mut self.second) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (sqrt(v_hat) + epsilon);
        }
        Ok(())
    }
}
