use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, MlpConfig, MlpParams};
use crate::dataset::ScalerParams;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerDoc {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    config: MlpConfig,
    scaler: ScalerParams,
    layers: Vec<LayerDoc>,
}

/// A trained network together with everything needed to use it.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: MlpParams,
    pub scaler: ScalerParams,
    pub config: MlpConfig,
}

fn to_doc(params: &MlpParams, scaler: &ScalerParams, config: &MlpConfig) -> ModelDoc {
    ModelDoc {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        scaler: scaler.clone(),
        layers: params
            .layers
            .iter()
            .map(|l| LayerDoc {
                w: l.weights.chunks(l.in_dim).map(<[f64]>::to_vec).collect(),
                b: l.biases.clone(),
            })
            .collect(),
    }
}

/// Serializes the model as one JSON document. Reals are written in their
/// shortest round-trip form, so loading restores every bit.
pub fn model_to_json(
    params: &MlpParams,
    scaler: &ScalerParams,
    config: &MlpConfig,
) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_doc(
        params, scaler, config,
    ))?)
}

pub fn save_model(
    params: &MlpParams,
    scaler: &ScalerParams,
    config: &MlpConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    params.check_shapes(config)?;
    let mut text = model_to_json(params, scaler, config)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, path)
}

pub fn model_from_json(text: &str, path: &Path) -> Result<SavedModel> {
    let corrupt = |message: String| Error::CorruptModel {
        path: path.to_path_buf(),
        message,
    };
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: version as u32,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (k, l) in doc.layers.into_iter().enumerate() {
        let out_dim = l.w.len();
        let in_dim = l.w.first().map_or(0, Vec::len);
        if out_dim == 0
            || in_dim == 0
            || l.w.iter().any(|r| r.len() != in_dim)
            || l.b.len() != out_dim
        {
            return Err(corrupt(format!("layer {k} has inconsistent shape")));
        }
        layers.push(Layer {
            in_dim,
            out_dim,
            weights: l.w.into_iter().flatten().collect(),
            biases: l.b,
        });
    }
    let params = MlpParams { layers };
    params
        .check_shapes(&doc.config)
        .map_err(|e| corrupt(format!("layers do not match config: {e}")))?;
    if doc.scaler.dim() != doc.config.input_dim {
        return Err(corrupt("scaler dimension does not match input_dim".into()));
    }
    if !params.is_finite() {
        return Err(corrupt("non-finite parameter".into()));
    }
    Ok(SavedModel {
        params,
        scaler: doc.scaler,
        config: doc.config,
    })
}
