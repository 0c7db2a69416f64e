//! Oracles shared by the integration tests. Nothing here calls the library's
//! forward pass or metric code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, Div, Mul, Sub};

use twofloat::TwoFloat;

use regnl::matrix::Matrix;
use regnl::mlp::{backward, forward_batch, init_params, DropoutRng, MlpConfig, MlpParams, Mode};

/// Central-difference step on scaled inputs.
pub const FD_STEP: f64 = 1e-5;

/// Below this magnitude a gradient component is compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;

/// `10 · Σ|a − p| / Σa`, the weighted error written without the share
/// weights.
pub fn weighted_error_oracle(actual: &[f64], predicted: &[f64]) -> f64 {
    let num: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    10.0 * num / actual.iter().sum::<f64>()
}

pub trait Real:
    Copy
    + PartialOrd
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Real for T where
    T: Copy
        + PartialOrd
        + From<f64>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

/// One layer for one row: affine map, then ReLU and the dropout multiplier
/// on hidden layers. Hidden signs are appended to `signs`.
fn layer_row<T: Real>(
    params: &MlpParams,
    l: usize,
    masks: &[Vec<f64>],
    r: usize,
    h: &[T],
    signs: &mut Vec<bool>,
) -> Vec<T> {
    let layer = &params.layers[l];
    let zero = T::from(0.0);
    let mut z: Vec<T> = (0..layer.out_dim)
        .map(|o| {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            row.iter()
                .zip(h)
                .fold(T::from(layer.biases[o]), |s, (&w, &v)| s + T::from(w) * v)
        })
        .collect();
    if l + 1 < params.layers.len() {
        for (o, zo) in z.iter_mut().enumerate() {
            let positive = *zo > zero;
            signs.push(positive);
            let m = masks
                .get(l)
                .and_then(|m| m.get(r * layer.out_dim + o))
                .copied()
                .unwrap_or(1.0);
            *zo = if positive { *zo * T::from(m) } else { zero };
        }
    }
    z
}

/// Inputs to every layer, per row.
fn layer_inputs<T: Real>(params: &MlpParams, masks: &[Vec<f64>], x: &Matrix) -> Vec<Vec<Vec<T>>> {
    let mut inputs = vec![(0..x.rows())
        .map(|r| x.row(r).iter().map(|&v| T::from(v)).collect())
        .collect::<Vec<Vec<T>>>()];
    let mut scratch = Vec::new();
    for l in 0..params.layers.len() - 1 {
        let next = inputs[l]
            .iter()
            .enumerate()
            .map(|(r, h)| layer_row(params, l, masks, r, h, &mut scratch))
            .collect();
        inputs.push(next);
    }
    inputs
}

/// Loss from layer `start` on, given that layer's inputs. Signs cover
/// hidden layers from `start`.
fn loss_from<T: Real>(
    params: &MlpParams,
    masks: &[Vec<f64>],
    start: usize,
    inputs: &[Vec<T>],
    y: &[f64],
    decay: f64,
) -> (T, Vec<bool>) {
    let mut signs = Vec::new();
    let mut sq = T::from(0.0);
    for (r, h) in inputs.iter().enumerate() {
        let mut h = h.clone();
        for l in start..params.layers.len() {
            h = layer_row(params, l, masks, r, &h, &mut signs);
        }
        let e = h[0] - T::from(y[r]);
        sq = sq + e * e;
    }
    let w2 = params
        .layers
        .iter()
        .flat_map(|l| l.weights.iter())
        .fold(T::from(0.0), |s, &w| s + T::from(w) * T::from(w));
    (
        sq / T::from(inputs.len() as f64) + T::from(0.5 * decay) * w2,
        signs,
    )
}

/// Plain loop forward pass with explicit dropout multipliers, returning the
/// loss `MSE + decay · ‖W‖² / 2` and the sign pattern of every hidden
/// pre-activation.
pub fn naive_loss(
    params: &MlpParams,
    masks: &[Vec<f64>],
    x: &Matrix,
    y: &[f64],
    decay: f64,
) -> (f64, Vec<bool>) {
    let inputs = layer_inputs::<f64>(params, masks, x);
    loss_from(params, masks, 0, &inputs[0], y, decay)
}

/// Central difference of the loss in coordinate `idx` of layer `layer`,
/// with that layer's inputs precomputed, or `None` when the stencil crosses
/// a ReLU kink. Divides by the step actually represented.
fn central_difference<T: Real>(
    params: &MlpParams,
    idx: usize,
    layer: usize,
    inputs: &[Vec<T>],
    masks: &[Vec<f64>],
    y: &[f64],
    decay: f64,
) -> Option<(T, T)> {
    let mut plus = params.clone();
    *plus.flat_get_mut(idx) += FD_STEP;
    let mut minus = params.clone();
    *minus.flat_get_mut(idx) -= FD_STEP;
    let span = *plus.flat_get_mut(idx) - *minus.flat_get_mut(idx);
    let (lp, sp) = loss_from(&plus, masks, layer, inputs, y, decay);
    let (lm, sm) = loss_from(&minus, masks, layer, inputs, y, decay);
    (sp == sm).then(|| ((lp - lm) / T::from(span), lp))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub max_rel: f64,
    pub checked: usize,
    /// Components whose stencil crossed a ReLU kink.
    pub skipped: usize,
}

/// Analytic gradient of an 8 × 16 network with dropout 0.1 and weight decay
/// versus central differences of [`naive_loss_in`] under the same masks.
///
/// Each difference is taken in `f64` first. When its rounding error
/// (about `ε · L / h`) is not negligible next to the component, it is redone
/// in double-double.
///
/// Relative error is `|a − n| / max(|a|, |n|, GRAD_FLOOR)`. Components whose
/// ±h evaluations flip any ReLU are not differentiable on the stencil and
/// are counted as skipped.
pub fn gradient_check(seed: u64) -> GradCheck {
    let rows = 6;
    let decay = 1e-3;
    let config = MlpConfig {
        hidden_widths: vec![16; 8],
        dropout_rate: 0.1,
        weight_decay: decay,
        seed,
        ..MlpConfig::new(3)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut params = init_params(&config).unwrap();
    for l in &mut params.layers {
        for b in &mut l.biases {
            *b = rng.gen_range(-0.1..0.1);
        }
    }
    let x = Matrix::from_vec(
        rows,
        3,
        (0..rows * 3).map(|_| rng.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let y: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.0..1.0)).collect();

    let mut drop_rng = DropoutRng::seed_from_u64(seed);
    let cache = forward_batch(
        &x,
        &params,
        Mode::Train {
            dropout_rate: config.dropout_rate,
            rng: &mut drop_rng,
        },
    )
    .unwrap();
    let analytic = backward(&y, &params, decay, &cache).unwrap().flatten();
    let masks = &cache.masks;

    let owner: Vec<usize> = params
        .layers
        .iter()
        .enumerate()
        .flat_map(|(l, layer)| std::iter::repeat_n(l, layer.weights.len() + layer.biases.len()))
        .collect();
    let inputs = layer_inputs::<f64>(&params, masks, &x);
    let mut inputs_dd: Option<Vec<Vec<Vec<TwoFloat>>>> = None;

    let mut out = GradCheck::default();
    for (idx, &a) in analytic.iter().enumerate() {
        let l = owner[idx];
        let Some((n, loss)) =
            central_difference::<f64>(&params, idx, l, &inputs[l], masks, &y, decay)
        else {
            out.skipped += 1;
            continue;
        };
        let roundoff = 8.0 * f64::EPSILON * loss.abs() / FD_STEP;
        let n = if roundoff <= 1e-5 * a.abs().max(n.abs()) {
            n
        } else {
            let dd = inputs_dd.get_or_insert_with(|| layer_inputs(&params, masks, &x));
            match central_difference::<TwoFloat>(&params, idx, l, &dd[l], masks, &y, decay) {
                Some((n, _)) => f64::from(n),
                None => {
                    out.skipped += 1;
                    continue;
                }
            }
        };
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(GRAD_FLOOR);
        out.max_rel = out.max_rel.max(rel);
        out.checked += 1;
    }
    out
}
