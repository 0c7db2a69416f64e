use rand::RngCore;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{kernels, Layer, MlpParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Generator used for dropout masks.
pub type DropoutRng = Xoshiro256PlusPlus;

/// Forward-pass mode. `Train` samples inverted-dropout masks after every
/// hidden ReLU; `Eval` is mask-free.
pub enum Mode<'a> {
    Eval,
    Train {
        dropout_rate: f64,
        rng: &'a mut DropoutRng,
    },
}

/// Activations of one forward pass over a batch, kept for backprop.
///
/// All buffers are row-major `rows × width`. `pre[l]` is the pre-activation
/// of stage `l` (the last stage is the network output), `act[l]` the masked
/// ReLU output of hidden stage `l`, and `masks[l]` the dropout multipliers
/// (`0` or `1 / (1 - rate)`), empty when no dropout was applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchCache {
    pub rows: usize,
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub act: Vec<Vec<f64>>,
    pub masks: Vec<Vec<f64>>,
}

impl BatchCache {
    pub fn outputs(&self) -> &[f64] {
        self.pre.last().map_or(&[], |v| v.as_slice())
    }

    fn reset(&mut self, params: &MlpParams, rows: usize, dropout: bool) {
        let stages = params.layers.len();
        self.rows = rows;
        self.pre.resize_with(stages, Vec::new);
        self.act.resize_with(stages - 1, Vec::new);
        self.masks.resize_with(stages - 1, Vec::new);
        for (l, layer) in params.layers.iter().enumerate() {
            self.pre[l].resize(rows * layer.out_dim, 0.0);
            if l + 1 < stages {
                self.act[l].resize(rows * layer.out_dim, 0.0);
                if dropout {
                    self.masks[l].resize(rows * layer.out_dim, 0.0);
                } else {
                    self.masks[l].clear();
                }
            }
        }
    }
}

/// Below this rate drops are placed by geometric gaps, which costs one draw
/// per dropped unit instead of 16 bits per unit.
const SPARSE_RATE: f64 = 0.05;

/// Samples inverted-dropout multipliers (`0` or `1 / (1 - rate)`).
fn draw_masks(mask: &mut [f64], rate: f64, rng: &mut DropoutRng) {
    if rate < SPARSE_RATE {
        draw_sparse(mask, rate, rng);
    } else {
        draw_dense(mask, rate, rng);
    }
}

/// Gaps between drops are geometric with success probability `rate`.
fn draw_sparse(mask: &mut [f64], rate: f64, rng: &mut DropoutRng) {
    let keep = 1.0 - rate;
    mask.fill(1.0 / keep);
    let log_keep = keep.ln();
    let mut gap = || {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        ((1.0 - u).ln() / log_keep) as usize
    };
    let mut pos = gap();
    while pos < mask.len() {
        mask[pos] = 0.0;
        pos = pos.saturating_add(1).saturating_add(gap());
    }
}

/// Each unit uses 16 random bits, so the keep probability is resolved to
/// 1/65536.
fn draw_dense(mask: &mut [f64], rate: f64, rng: &mut DropoutRng) {
    let keep = 1.0 - rate;
    let threshold = (keep * 65_536.0).round() as u32;
    let scale = 1.0 / keep;
    let mut bits = [0u16; 64];
    for block in mask.chunks_mut(64) {
        let used = block.len().div_ceil(4);
        for quad in bits.chunks_exact_mut(4).take(used) {
            let w = rng.next_u64();
            for (j, b) in quad.iter_mut().enumerate() {
                *b = (w >> (16 * j)) as u16;
            }
        }
        for (m, &b) in block.iter_mut().zip(&bits) {
            *m = if u32::from(b) < threshold { scale } else { 0.0 };
        }
    }
}

/// Core forward kernel over flat row-major input. `transposed[l]` must be
/// the `in × out` transpose of `params.layers[l].weights`.
pub(super) fn forward_into(
    params: &MlpParams,
    transposed: &[Vec<f64>],
    input: &[f64],
    rows: usize,
    mode: &mut Mode<'_>,
    cache: &mut BatchCache,
) {
    let dropout = matches!(mode, Mode::Train { dropout_rate, .. } if *dropout_rate > 0.0);
    cache.reset(params, rows, dropout);
    cache.input.clear();
    cache.input.extend_from_slice(input);
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let (prev, rest) = cache.act.split_at_mut(l.min(last));
        let source: &[f64] = if l == 0 { input } else { &prev[l - 1] };
        kernels::rows_times_matrix(
            source,
            rows,
            layer.in_dim,
            &transposed[l],
            &layer.biases,
            &mut cache.pre[l],
        );
        if l == last {
            break;
        }
        let act = &mut rest[0];
        for (a, &z) in act.iter_mut().zip(&cache.pre[l]) {
            *a = z.max(0.0);
        }
        if let Mode::Train { dropout_rate, rng } = mode {
            if dropout {
                draw_masks(&mut cache.masks[l], *dropout_rate, rng);
                for (a, &m) in act.iter_mut().zip(&cache.masks[l]) {
                    *a *= m;
                }
            }
        }
    }
}

/// Accumulates parameter gradients for the cached batch into `grads`.
///
/// `d_out[r]` is ∂L/∂ŷ for row `r`. `delta` and `next` are scratch buffers.
pub(super) fn backward_accumulate(
    params: &MlpParams,
    cache: &BatchCache,
    d_out: &[f64],
    grads: &mut MlpParams,
    delta: &mut Vec<f64>,
    next: &mut Vec<f64>,
) {
    let rows = cache.rows;
    delta.clear();
    delta.extend_from_slice(d_out);
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let g = &mut grads.layers[l];
        let (n_in, n_out) = (layer.in_dim, layer.out_dim);
        let a_prev: &[f64] = if l == 0 {
            &cache.input
        } else {
            &cache.act[l - 1]
        };
        for r in 0..rows {
            for (gb, &d) in g.biases.iter_mut().zip(&delta[r * n_out..(r + 1) * n_out]) {
                *gb += d;
            }
        }
        kernels::accumulate_outer(delta, rows, n_out, a_prev, n_in, &mut g.weights);
        if l == 0 {
            break;
        }
        next.resize(rows * n_in, 0.0);
        kernels::rows_times_matrix(delta, rows, n_out, &layer.weights, &[], next);
        let z = &cache.pre[l - 1];
        let masks = &cache.masks[l - 1];
        if masks.is_empty() {
            for (n, &zv) in next.iter_mut().zip(z) {
                if zv <= 0.0 {
                    *n = 0.0;
                }
            }
        } else {
            for ((n, &zv), &m) in next.iter_mut().zip(z).zip(masks) {
                *n = if zv > 0.0 { *n * m } else { 0.0 };
            }
        }
        std::mem::swap(delta, next);
    }
}

fn check_input(params: &MlpParams, x: &Matrix) -> Result<()> {
    if x.cols() != params.input_dim() {
        return Err(Error::Dimension {
            expected: params.input_dim(),
            found: x.cols(),
        });
    }
    if let Some(v) = x.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(
            "network input",
            format!("non-finite value {v}"),
        ));
    }
    Ok(())
}

fn transposed(params: &MlpParams) -> Vec<Vec<f64>> {
    params.layers.iter().map(Layer::transposed).collect()
}

/// Forward pass over every row of `x`.
pub fn forward_batch(x: &Matrix, params: &MlpParams, mut mode: Mode<'_>) -> Result<BatchCache> {
    check_input(params, x)?;
    let mut cache = BatchCache::default();
    forward_into(
        params,
        &transposed(params),
        x.as_slice(),
        x.rows(),
        &mut mode,
        &mut cache,
    );
    Ok(cache)
}

/// Single-row forward pass; returns the prediction and the activations.
pub fn forward(x: &[f64], params: &MlpParams, mode: Mode<'_>) -> Result<(f64, BatchCache)> {
    let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let cache = forward_batch(&m, params, mode)?;
    Ok((cache.outputs()[0], cache))
}

pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("mse of zero predictions".into()));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Gradient of `MSE + weight_decay · ‖W‖² / 2` over the cached batch, using
/// the dropout masks recorded in `cache`.
pub fn backward(
    targets: &[f64],
    params: &MlpParams,
    weight_decay: f64,
    cache: &BatchCache,
) -> Result<MlpParams> {
    if targets.len() != cache.rows {
        return Err(Error::Dimension {
            expected: cache.rows,
            found: targets.len(),
        });
    }
    if cache.pre.len() != params.layers.len()
        || cache.input.len() != cache.rows * params.input_dim()
    {
        return Err(Error::Dimension {
            expected: params.layers.len(),
            found: cache.pre.len(),
        });
    }
    if cache.rows == 0 {
        return Err(Error::Empty("backward over an empty batch".into()));
    }
    let n = cache.rows as f64;
    let d_out: Vec<f64> = cache
        .outputs()
        .iter()
        .zip(targets)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    let mut grads = MlpParams {
        layers: params
            .layers
            .iter()
            .map(|l| Layer::zeros(l.in_dim, l.out_dim))
            .collect(),
    };
    let (mut delta, mut next) = (Vec::new(), Vec::new());
    backward_accumulate(params, cache, &d_out, &mut grads, &mut delta, &mut next);
    if weight_decay != 0.0 {
        for (g, p) in grads.layers.iter_mut().zip(&params.layers) {
            for (gw, &w) in g.weights.iter_mut().zip(&p.weights) {
                *gw += weight_decay * w;
            }
        }
    }
    Ok(grads)
}

/// Eval-mode predictions, one per row, in row order.
pub fn predict_batch(x: &Matrix, params: &MlpParams) -> Result<Vec<f64>> {
    if x.rows() == 0 && x.cols() == params.input_dim() {
        return Ok(Vec::new());
    }
    Ok(forward_batch(x, params, Mode::Eval)?.outputs().to_vec())
}
