//! Report types, table rendering and published reference values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::dataset::FeatureSpec;
use crate::ingest::Period;

/// A published number printed for orientation. Never computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub label: String,
    pub value: f64,
}

fn refs(items: &[(&str, f64)]) -> Vec<ReferenceLine> {
    items
        .iter()
        .map(|&(label, value)| ReferenceLine {
            label: label.to_string(),
            value,
        })
        .collect()
}

/// 2019 feature ablation on US states.
pub fn ablation_references() -> Vec<ReferenceLine> {
    refs(&[
        ("2019 Q1 nightlight only", 7.3477),
        ("2019 Q2 nightlight only", 5.7446),
        ("2019 Q3 nightlight only", 5.8081),
        ("2019 Q4 nightlight only", 5.9619),
        ("2019 average nightlight only", 6.2156),
        ("2019 Q1 nightlight + lat/long", 0.7697),
        ("2019 Q2 nightlight + lat/long", 0.5034),
        ("2019 Q3 nightlight + lat/long", 0.8681),
        ("2019 Q4 nightlight + lat/long", 0.6852),
        ("2019 average nightlight + lat/long", 0.7066),
    ])
}

/// 2020 results, the ARIMA comparison and the 2019 model comparison.
/// SVR and XGBoost are not implemented here, so their lines are the only
/// record of them.
pub fn comparison_references() -> Vec<ReferenceLine> {
    refs(&[
        ("2020 Q1 ReGNL", 0.7243),
        ("2020 Q2 ReGNL", 0.6879),
        ("2020 Q3 ReGNL", 0.6983),
        ("2020 Q4 ReGNL", 0.6478),
        ("2020 average ReGNL", 0.6895),
        ("2020 Q1 ARIMA", 0.1235),
        ("2020 Q2 ARIMA", 1.4976),
        ("2019 average SVR", 6.8221),
        ("2019 average linear regression", 5.1546),
        ("2019 average neural network", 0.7066),
        ("2019 average XGBoost", 5.1436),
        ("Germany 2019 (annual)", 1.8649),
        ("Germany 2020 (annual)", 1.9488),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodError {
    pub year: i32,
    pub period: Period,
    pub weighted_error: f64,
    pub mape: f64,
    pub regions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: ModelKind,
    pub features: FeatureSpec,
    pub predictions: String,
    pub periods: Vec<PeriodError>,
    pub average: f64,
}

impl ModelEvaluation {
    pub fn error_at(&self, year: i32, period: Period) -> Option<f64> {
        self.periods
            .iter()
            .find(|p| p.year == year && p.period == period)
            .map(|p| p.weighted_error)
    }
}

/// Per-period weighted errors for every evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub features: FeatureSpec,
    pub models: Vec<ModelEvaluation>,
    pub references: Vec<ReferenceLine>,
}

impl EvaluationReport {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelEvaluation> {
        self.models.iter().find(|m| m.model == kind)
    }

    pub fn render_text(&self) -> String {
        let title = format!("Weighted error per period (features: {})", self.features);
        render_table(&title, &self.models, &self.references)
    }
}

/// One region's actual and predicted GDP in one period, one prediction per
/// compared model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub year: i32,
    pub period: Period,
    pub region: String,
    pub actual: f64,
    pub predicted: Vec<f64>,
}

/// Side-by-side comparison of models on the same test periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub features: FeatureSpec,
    pub models: Vec<ModelEvaluation>,
    pub rows: Vec<PlotRow>,
    pub plot_files: Vec<String>,
    pub references: Vec<ReferenceLine>,
}

impl ComparisonReport {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelEvaluation> {
        self.models.iter().find(|m| m.model == kind)
    }

    pub fn render_text(&self) -> String {
        let title = format!("Model comparison (features: {})", self.features);
        render_table(&title, &self.models, &self.references)
    }
}

fn render_table(title: &str, models: &[ModelEvaluation], references: &[ReferenceLine]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<10}", "period");
    for m in models {
        let _ = write!(out, "{:>12}", m.model.to_string());
    }
    out.push('\n');
    let keys: Vec<(i32, Period)> = models
        .first()
        .map(|m| m.periods.iter().map(|p| (p.year, p.period)).collect())
        .unwrap_or_default();
    for (year, period) in keys {
        let _ = write!(out, "{:<10}", format!("{year} {period}"));
        for m in models {
            match m.error_at(year, period) {
                Some(v) => {
                    let _ = write!(out, "{v:>12.4}");
                }
                None => {
                    let _ = write!(out, "{:>12}", "-");
                }
            }
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<10}", "average");
    for m in models {
        let _ = write!(out, "{:>12.4}", m.average);
    }
    out.push('\n');
    if !references.is_empty() {
        out.push_str("\npublished reference values (not computed here):\n");
        for r in references {
            let _ = writeln!(out, "  [reference] {:<38}{:>8.4}", r.label, r.value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(model: ModelKind, errors: &[f64]) -> ModelEvaluation {
        ModelEvaluation {
            model,
            features: FeatureSpec::FULL,
            predictions: String::new(),
            periods: errors
                .iter()
                .enumerate()
                .map(|(i, &e)| PeriodError {
                    year: 2019,
                    period: Period::Quarter(i as u8 + 1),
                    weighted_error: e,
                    mape: e / 10.0,
                    regions: 3,
                })
                .collect(),
            average: errors.iter().sum::<f64>() / errors.len() as f64,
        }
    }

    #[test]
    fn table_has_one_line_per_period_and_labels_references() {
        let report = EvaluationReport {
            features: FeatureSpec::FULL,
            models: vec![
                eval(ModelKind::Regnl, &[0.5, 1.5]),
                eval(ModelKind::Linreg, &[5.0, 6.0]),
            ],
            references: ablation_references(),
        };
        let text = report.render_text();
        assert!(text.contains("2019 Q1"));
        assert!(text.contains("2019 Q2"));
        assert!(text.contains("1.0000"));
        assert!(text.contains("5.5000"));
        assert_eq!(text.matches("[reference]").count(), 10);
        assert!(text.contains("6.2156") && text.contains("0.7066"));
    }

    #[test]
    fn comparison_references_include_unimplemented_models() {
        let refs = comparison_references();
        let find = |label: &str| refs.iter().find(|r| r.label.contains(label)).unwrap().value;
        assert_eq!(find("SVR"), 6.8221);
        assert_eq!(find("XGBoost"), 5.1436);
    }
}
