//! GDP-share-weighted prediction error.
//!
//! For a set of regions evaluated in one period,
//!
//! ```text
//! error = Σ_regions |actual − predicted| / actual · actual / national · 10
//! ```
//!
//! where `national` is the sum of actual GDP over the evaluated regions. Each
//! region's relative error is weighted by its share of the total, and the sum
//! is scaled by a constant factor of 10.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale applied to the weighted sum.
pub const CONSTANT_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPrediction {
    pub region_id: String,
    pub actual: f64,
    pub predicted: f64,
}

impl RegionPrediction {
    pub fn new(region_id: impl Into<String>, actual: f64, predicted: f64) -> Self {
        RegionPrediction {
            region_id: region_id.into(),
            actual,
            predicted,
        }
    }
}

/// Actual and predicted GDP for every region evaluated in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationInput {
    regions: Vec<RegionPrediction>,
}

impl EvaluationInput {
    pub fn new(regions: Vec<RegionPrediction>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Empty("evaluation needs at least one region".into()));
        }
        for r in &regions {
            if !(r.actual.is_finite() && r.actual > 0.0) {
                return Err(Error::validation(
                    format!("region {}", r.region_id),
                    format!("actual GDP must be positive, got {}", r.actual),
                ));
            }
            if !r.predicted.is_finite() {
                return Err(Error::validation(
                    format!("region {}", r.region_id),
                    format!("prediction is not finite: {}", r.predicted),
                ));
            }
        }
        Ok(EvaluationInput { regions })
    }

    pub fn regions(&self) -> &[RegionPrediction] {
        &self.regions
    }

    pub fn national(&self) -> f64 {
        self.regions.iter().map(|r| r.actual).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTerm {
    pub region_id: String,
    pub actual: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedErrorReport {
    pub total: f64,
    pub national: f64,
    pub constant_factor: f64,
    pub terms: Vec<RegionTerm>,
}

impl WeightedErrorReport {
    pub fn write_terms_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_terms(file).map_err(|e| Error::io(path, e))
    }

    pub fn write_terms<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "region_id",
            "actual",
            "predicted",
            "relative_error",
            "weight",
            "contribution",
        ])?;
        for t in &self.terms {
            w.write_record([
                t.region_id.clone(),
                t.actual.to_string(),
                t.predicted.to_string(),
                t.relative_error.to_string(),
                t.weight.to_string(),
                t.contribution.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Evaluates the weighted error term by term.
pub fn weighted_error(input: &EvaluationInput) -> WeightedErrorReport {
    let national = input.national();
    let terms: Vec<RegionTerm> = input
        .regions
        .iter()
        .map(|r| {
            let relative_error = (r.actual - r.predicted).abs() / r.actual;
            let weight = r.actual / national;
            RegionTerm {
                region_id: r.region_id.clone(),
                actual: r.actual,
                predicted: r.predicted,
                relative_error,
                weight,
                contribution: relative_error * weight * CONSTANT_FACTOR,
            }
        })
        .collect();
    WeightedErrorReport {
        total: terms.iter().map(|t| t.contribution).sum(),
        national,
        constant_factor: CONSTANT_FACTOR,
        terms,
    }
}

/// Unweighted mean absolute percentage error, as a fraction.
pub fn mape(input: &EvaluationInput) -> f64 {
    let n = input.regions.len() as f64;
    input
        .regions
        .iter()
        .map(|r| (r.actual - r.predicted).abs() / r.actual)
        .sum::<f64>()
        / n
}
