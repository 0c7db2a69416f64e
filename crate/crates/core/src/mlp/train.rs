use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{backward_accumulate, forward_into, predict_batch, BatchCache, Mode};
use super::{init_params, Layer, MlpConfig, MlpParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows per gradient chunk. Chunk boundaries, not thread count, fix the
/// summation order, so results are identical on any number of threads.
const CHUNK_ROWS: usize = 64;

/// Number of trace samples over a full run.
const TRACE_POINTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: u64,
    /// Train-mode (dropout on) MSE of the step taken at this epoch.
    pub train_mse: f64,
    pub holdout_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub points: Vec<TracePoint>,
    /// Eval-mode MSE on the training rows after the last step.
    pub final_loss: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrainingTrace {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_mse", "holdout_mse"])?;
        for p in &self.points {
            w.write_record([
                p.epoch.to_string(),
                p.train_mse.to_string(),
                p.holdout_mse.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}

/// Per-thread buffers, reused by every chunk that thread processes so the
/// working set stays in cache.
#[derive(Default)]
struct Scratch {
    cache: BatchCache,
    d_out: Vec<f64>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

struct Chunk {
    start: usize,
    rows: usize,
    rng: Xoshiro256PlusPlus,
    grads: MlpParams,
    sq_err: f64,
}

impl Chunk {
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        params: &MlpParams,
        transposed: &[Vec<f64>],
        x: &Matrix,
        y: &[f64],
        n_total: f64,
        dropout_rate: f64,
        s: &mut Scratch,
    ) {
        let cols = x.cols();
        let input = &x.as_slice()[self.start * cols..(self.start + self.rows) * cols];
        let mut mode = Mode::Train {
            dropout_rate,
            rng: &mut self.rng,
        };
        forward_into(
            params,
            transposed,
            input,
            self.rows,
            &mut mode,
            &mut s.cache,
        );
        self.sq_err = 0.0;
        s.d_out.clear();
        for (&p, &t) in s
            .cache
            .outputs()
            .iter()
            .zip(&y[self.start..self.start + self.rows])
        {
            let r = p - t;
            self.sq_err += r * r;
            s.d_out.push(2.0 * r / n_total);
        }
        for l in &mut self.grads.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
        backward_accumulate(
            params,
            &s.cache,
            &s.d_out,
            &mut self.grads,
            &mut s.delta,
            &mut s.next,
        );
    }
}

fn zeros_like(params: &MlpParams) -> MlpParams {
    MlpParams {
        layers: params
            .layers
            .iter()
            .map(|l| Layer::zeros(l.in_dim, l.out_dim))
            .collect(),
    }
}

/// Full-batch gradient descent on scaled data. See [`train_monitored`].
pub fn train(x: &Matrix, y: &[f64], config: &MlpConfig) -> Result<(MlpParams, TrainingTrace)> {
    train_monitored(x, y, None, config)
}

/// Full-batch gradient descent for `config.epochs` steps, optionally
/// reporting eval-mode MSE on a holdout set at every trace point.
///
/// The trace is sampled every `max(1, epochs / 1000)` epochs. A non-finite
/// loss aborts with [`Error::Diverged`].
pub fn train_monitored(
    x: &Matrix,
    y: &[f64],
    holdout: Option<(&Matrix, &[f64])>,
    config: &MlpConfig,
) -> Result<(MlpParams, TrainingTrace)> {
    config.validate()?;
    if x.cols() != config.input_dim {
        return Err(Error::Dimension {
            expected: config.input_dim,
            found: x.cols(),
        });
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Empty("training set has no rows".into()));
    }
    if let Some(v) = x.as_slice().iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::validation(
            "training data",
            format!("non-finite value {v}"),
        ));
    }

    let started = Instant::now();
    let mut params = init_params(config)?;
    let n = x.rows();
    let stride = (config.epochs / TRACE_POINTS).max(1);

    let mut chunks: Vec<Chunk> = (0..n.div_ceil(CHUNK_ROWS))
        .map(|c| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
            for _ in 0..=c {
                rng.jump();
            }
            let start = c * CHUNK_ROWS;
            Chunk {
                start,
                rows: CHUNK_ROWS.min(n - start),
                rng,
                grads: zeros_like(&params),
                sq_err: 0.0,
            }
        })
        .collect();
    let per_group = chunks.len().div_ceil(rayon::current_num_threads().max(1));
    let mut scratch: Vec<Scratch> = (0..chunks.len().div_ceil(per_group))
        .map(|_| Scratch::default())
        .collect();

    let mut grads = zeros_like(&params);
    let mut transposed: Vec<Vec<f64>> = params.layers.iter().map(Layer::transposed).collect();
    let mut points = Vec::new();
    let lr = config.learning_rate;
    let decay = config.weight_decay;

    for epoch in 0..config.epochs {
        for (t, l) in transposed.iter_mut().zip(&params.layers) {
            for o in 0..l.out_dim {
                for i in 0..l.in_dim {
                    t[i * l.out_dim + o] = l.weights[o * l.in_dim + i];
                }
            }
        }
        {
            let p = &params;
            let t = &transposed;
            chunks
                .par_chunks_mut(per_group)
                .zip(scratch.par_iter_mut())
                .for_each(|(group, s)| {
                    for c in group {
                        c.step(p, t, x, y, n as f64, config.dropout_rate, s);
                    }
                });
        }

        let mut sq_err = 0.0;
        for (i, c) in chunks.iter().enumerate() {
            sq_err += c.sq_err;
            for (g, cg) in grads.layers.iter_mut().zip(&c.grads.layers) {
                if i == 0 {
                    g.weights.copy_from_slice(&cg.weights);
                    g.biases.copy_from_slice(&cg.biases);
                } else {
                    g.weights
                        .iter_mut()
                        .zip(&cg.weights)
                        .for_each(|(a, b)| *a += b);
                    g.biases
                        .iter_mut()
                        .zip(&cg.biases)
                        .for_each(|(a, b)| *a += b);
                }
            }
        }
        let loss = sq_err / n as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        if epoch % stride == 0 {
            let holdout_mse = match holdout {
                Some((hx, hy)) if !hy.is_empty() => {
                    Some(super::mse_loss(&predict_batch(hx, &params)?, hy)?)
                }
                _ => None,
            };
            points.push(TracePoint {
                epoch,
                train_mse: loss,
                holdout_mse,
            });
        }

        for (p, g) in params.layers.iter_mut().zip(&grads.layers) {
            for (w, &gw) in p.weights.iter_mut().zip(&g.weights) {
                *w -= lr * (gw + decay * *w);
            }
            for (b, &gb) in p.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
    }

    let final_loss = super::mse_loss(&predict_batch(x, &params)?, y)?;
    if !final_loss.is_finite() || !params.is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            loss: final_loss,
        });
    }
    Ok((
        params,
        TrainingTrace {
            points,
            final_loss,
            wall_time: started.elapsed(),
        },
    ))
}
