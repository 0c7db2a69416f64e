//! The nowcasting regressor: a stack of affine + ReLU hidden layers with
//! inverted dropout, followed by a single linear output unit.
//!
//! Training is plain full-batch gradient descent on mean squared error with
//! L2 weight decay on the weight matrices (biases are not decayed). Everything
//! random (initialization, dropout masks) is driven by `MlpConfig::seed`, so a
//! `(seed, data, config)` triple determines the trained parameters bit for bit.

mod io;
mod kernels;
mod network;
mod train;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_model, model_from_json, model_to_json, save_model, SavedModel, MODEL_FORMAT_VERSION,
};
pub use network::{
    backward, forward, forward_batch, mse_loss, predict_batch, BatchCache, DropoutRng, Mode,
};
pub use train::{train, train_monitored, TracePoint, TrainingTrace};

/// Number of hidden layers in the reference architecture.
pub const HIDDEN_LAYERS: usize = 8;
pub const DEFAULT_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub dropout_rate: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub epochs: u64,
    pub seed: u64,
}

impl MlpConfig {
    /// Desk-scale defaults: 8×16 hidden units, dropout 0.01, weight decay 1e-4,
    /// learning rate 0.05 on scaled data, 200 000 epochs.
    pub fn new(input_dim: usize) -> Self {
        MlpConfig {
            input_dim,
            hidden_widths: vec![DEFAULT_WIDTH; HIDDEN_LAYERS],
            dropout_rate: 0.01,
            weight_decay: 1e-4,
            learning_rate: 0.05,
            epochs: 200_000,
            seed: 0,
        }
    }

    /// The published schedule: 5·10^6 epochs at learning rate 10^-6.
    pub fn published_schedule(input_dim: usize) -> Self {
        MlpConfig {
            learning_rate: 1e-6,
            epochs: 5_000_000,
            ..MlpConfig::new(input_dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if let Some(i) = self.hidden_widths.iter().position(|&w| w == 0) {
            return Err(Error::Config(format!(
                "hidden layer {} has zero width",
                i + 1
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay {} must be >= 0",
                self.weight_decay
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// `(in, out)` of every affine stage, output stage last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &w in &self.hidden_widths {
            shapes.push((prev, w));
            prev = w;
        }
        shapes.push((prev, 1));
        shapes
    }
}

/// One affine stage. `weights` is row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.in_dim + inp]
    }

    /// `in_dim × out_dim` copy, used by the forward kernels.
    fn transposed(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.weights.len()];
        for o in 0..self.out_dim {
            for i in 0..self.in_dim {
                t[i * self.out_dim + o] = self.weights[o * self.in_dim + i];
            }
        }
        t
    }
}

/// All weights and biases; the last layer is the linear output stage.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(config: &MlpConfig) -> Self {
        MlpParams {
            layers: config
                .layer_shapes()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Checks the shape chain against `config`.
    pub fn check_shapes(&self, config: &MlpConfig) -> Result<()> {
        let shapes = config.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(Error::Dimension {
                expected: shapes.len(),
                found: self.layers.len(),
            });
        }
        for (layer, (i, o)) in self.layers.iter().zip(shapes) {
            if layer.in_dim != i || layer.out_dim != o {
                return Err(Error::Dimension {
                    expected: i * o,
                    found: layer.in_dim * layer.out_dim,
                });
            }
            if layer.weights.len() != i * o || layer.biases.len() != o {
                return Err(Error::Dimension {
                    expected: i * o + o,
                    found: layer.weights.len() + layer.biases.len(),
                });
            }
        }
        Ok(())
    }

    /// Flattened view, layer by layer: weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn flat_get_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return &mut l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }
}

/// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
pub fn init_params(config: &MlpConfig) -> Result<MlpParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = MlpParams::zeros(config);
    for layer in &mut params.layers {
        let bound = (6.0 / layer.in_dim as f64).sqrt();
        let dist = Uniform::new(-bound, bound);
        for w in &mut layer.weights {
            *w = dist.sample(&mut rng);
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_determined() {
        let c = MlpConfig::new(3);
        assert_eq!(init_params(&c).unwrap(), init_params(&c).unwrap());
        let other = MlpConfig {
            seed: 1,
            ..c.clone()
        };
        assert_ne!(init_params(&c).unwrap(), init_params(&other).unwrap());
    }

    #[test]
    fn first_layer_shape_and_bound() {
        let p = init_params(&MlpConfig::new(3)).unwrap();
        let first = &p.layers[0];
        assert_eq!((first.out_dim, first.in_dim), (16, 3));
        assert_eq!(first.weights.len(), 48);
        let bound = 2.0f64.sqrt(); // sqrt(6/3)
        assert!(first.weights.iter().all(|w| w.abs() < bound));
        assert!(first.weights.iter().any(|w| w.abs() > 0.5 * bound));
        assert!(p.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn architecture_has_eight_hidden_stages() {
        let p = init_params(&MlpConfig::new(3)).unwrap();
        assert_eq!(p.hidden_layers(), HIDDEN_LAYERS);
        assert_eq!(p.layers.len(), 9);
        for l in &p.layers[1..8] {
            assert_eq!((l.in_dim, l.out_dim), (16, 16));
        }
        assert_eq!((p.layers[8].in_dim, p.layers[8].out_dim), (16, 1));
        assert_eq!(p.parameter_count(), 16 * 3 + 16 + 7 * (256 + 16) + 17);
    }

    #[test]
    fn zero_width_rejected() {
        let mut c = MlpConfig::new(3);
        c.hidden_widths[4] = 0;
        assert!(matches!(init_params(&c), Err(Error::Config(_))));
    }

    #[test]
    fn config_validation() {
        let ok = MlpConfig::new(1);
        assert!(ok.validate().is_ok());
        assert!(MlpConfig {
            dropout_rate: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MlpConfig {
            weight_decay: -1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MlpConfig {
            learning_rate: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MlpConfig { input_dim: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn published_schedule_values() {
        let c = MlpConfig::published_schedule(3);
        assert_eq!(c.epochs, 5_000_000);
        assert_eq!(c.learning_rate, 1e-6);
        assert_eq!(c.hidden_widths.len(), 8);
    }
}
