//! Experiment orchestration: one JSON config, five commands, and the files
//! they leave under the output directory.
//!
//! ```text
//! simulate       -> radiance.csv gdp.csv centroids.csv deflators.csv config.json
//! build-dataset  -> dataset.csv coverage.json
//! train          -> models/regnl_<features>.json models/regnl_<features>_trace.csv
//!                   models/linreg_<features>.json models/arima.json
//! evaluate       -> predictions/*.csv terms/*.csv evaluation_<features>.{csv,json,txt}
//! compare        -> predictions/*.csv comparison.{csv,json,txt} plots/*.csv
//! ```
//!
//! Config precedence is built-in defaults, then the config file, then command
//! line flags. Relative paths in a config file are resolved against the
//! file's directory.

mod report;
mod simulate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arima::{forecast_regions, series_by_region, FitSummary};
use crate::baselines::{linreg_predict, ols_fit, LinearModel, DEFAULT_RIDGE_EPSILON};
use crate::dataset::{
    fit_scaler, holdout_split, inverse_transform_target, split_by_years, transform, FeatureSpec,
    SupervisedDataset,
};
use crate::error::{Error, Result};
use crate::ingest::{
    aggregate_to_period, join_records, parse_centroids_csv, parse_dataset_csv, parse_deflator_csv,
    parse_gdp_csv, parse_radiance_csv, rebase_gdp, write_dataset_csv, Frequency, JoinCoverage,
    Period, RegionQuarterRecord, DEFAULT_BASE_YEAR,
};
use crate::metrics::{mape, weighted_error, EvaluationInput, RegionPrediction};
use crate::mlp::{load_model, predict_batch, save_model, train_monitored, MlpConfig};

pub use report::{
    ablation_references, comparison_references, ComparisonReport, EvaluationReport,
    ModelEvaluation, PeriodError, PlotRow, ReferenceLine,
};
pub use simulate::{
    cmd_simulate, gdp_surface, generate, Disruption, SimulatedData, SimulationFiles, SimulationSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regnl,
    Arima,
    Linreg,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Regnl, ModelKind::Arima, ModelKind::Linreg];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Regnl => "regnl",
            ModelKind::Arima => "arima",
            ModelKind::Linreg => "linreg",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "regnl" => Ok(ModelKind::Regnl),
            "arima" => Ok(ModelKind::Arima),
            "linreg" => Ok(ModelKind::Linreg),
            other => Err(format!(
                "unknown model {other:?} (expected regnl, arima or linreg)"
            )),
        }
    }
}

/// Network hyperparameters. The input width follows the feature set and the
/// seed comes from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSettings {
    pub hidden_widths: Vec<usize>,
    pub dropout_rate: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub epochs: u64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        let c = MlpConfig::new(1);
        MlpSettings {
            hidden_widths: c.hidden_widths,
            dropout_rate: c.dropout_rate,
            weight_decay: c.weight_decay,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
        }
    }
}

impl MlpSettings {
    pub fn to_config(&self, input_dim: usize, seed: u64) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden_widths: self.hidden_widths.clone(),
            dropout_rate: self.dropout_rate,
            weight_decay: self.weight_decay,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radiance: PathBuf,
    pub gdp: PathBuf,
    pub centroids: PathBuf,
    pub deflators: PathBuf,
    pub base_year: i32,
    pub frequency: Frequency,
    pub features: FeatureSpec,
    pub train_years: Vec<i32>,
    pub test_years: Vec<i32>,
    pub models: Vec<ModelKind>,
    pub mlp: MlpSettings,
    /// Fraction of training rows held out for the loss trace; 0 disables it.
    pub holdout_fraction: f64,
    /// Keep periods with missing months in the dataset.
    pub include_incomplete: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radiance: "radiance.csv".into(),
            gdp: "gdp.csv".into(),
            centroids: "centroids.csv".into(),
            deflators: "deflators.csv".into(),
            base_year: DEFAULT_BASE_YEAR,
            frequency: Frequency::Quarterly,
            features: FeatureSpec::FULL,
            train_years: (2014..=2018).collect(),
            test_years: (2019..=2020).collect(),
            models: vec![ModelKind::Regnl, ModelKind::Arima],
            mlp: MlpSettings::default(),
            holdout_fraction: 0.0,
            include_incomplete: false,
            seed: 0,
            out_dir: "out".into(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub features: Option<FeatureSpec>,
    pub model: Option<ModelKind>,
}

impl ExperimentConfig {
    /// Reads a config file over the defaults and resolves its relative paths
    /// against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.radiance,
            &mut config.gdp,
            &mut config.centroids,
            &mut config.deflators,
            &mut config.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Defaults, then `path` if given, then `overrides`; validated.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut config = match path {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
        if let Some(f) = o.features {
            self.features = f;
        }
        if let Some(m) = o.model {
            self.models = vec![m];
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_years.is_empty() {
            return Err(Error::Config("train_years is empty".into()));
        }
        if self.test_years.is_empty() {
            return Err(Error::Config("test_years is empty".into()));
        }
        if let Some(y) = self.train_set().intersection(&self.test_set()).next() {
            return Err(Error::Config(format!(
                "year {y} is in both train_years and test_years"
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models requested".into()));
        }
        if self.models.iter().collect::<BTreeSet<_>>().len() != self.models.len() {
            return Err(Error::Config("a model is listed twice".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!(
                "holdout_fraction {} outside [0, 1)",
                self.holdout_fraction
            )));
        }
        self.mlp_config().validate()
    }

    /// Fails with the path of the first input file that does not exist.
    pub fn check_inputs(&self) -> Result<()> {
        for (name, p) in [
            ("radiance", &self.radiance),
            ("gdp", &self.gdp),
            ("centroids", &self.centroids),
            ("deflators", &self.deflators),
        ] {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "{name} file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn train_set(&self) -> BTreeSet<i32> {
        self.train_years.iter().copied().collect()
    }

    pub fn test_set(&self) -> BTreeSet<i32> {
        self.test_years.iter().copied().collect()
    }

    pub fn mlp_config(&self) -> MlpConfig {
        self.mlp.to_config(self.features.dim(), self.seed)
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts {
            root: self.out_dir.clone(),
        }
    }

    /// Requested models in canonical order.
    pub fn sorted_models(&self) -> Vec<ModelKind> {
        let mut m = self.models.clone();
        m.sort();
        m
    }
}

/// File layout under the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub root: PathBuf,
}

impl Artifacts {
    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.csv")
    }

    pub fn coverage(&self) -> PathBuf {
        self.root.join("coverage.json")
    }

    pub fn model(&self, model: ModelKind, features: FeatureSpec) -> PathBuf {
        let dir = self.root.join("models");
        match model {
            ModelKind::Arima => dir.join("arima.json"),
            other => dir.join(format!("{other}_{features}.json")),
        }
    }

    pub fn trace(&self, features: FeatureSpec) -> PathBuf {
        self.root
            .join("models")
            .join(format!("regnl_{features}_trace.csv"))
    }

    pub fn predictions(&self, model: ModelKind, features: FeatureSpec) -> PathBuf {
        let dir = self.root.join("predictions");
        match model {
            ModelKind::Arima => dir.join("arima.csv"),
            other => dir.join(format!("{other}_{features}.csv")),
        }
    }

    pub fn terms(
        &self,
        model: ModelKind,
        features: FeatureSpec,
        year: i32,
        period: Period,
    ) -> PathBuf {
        let tag = match model {
            ModelKind::Arima => model.to_string(),
            other => format!("{other}_{features}"),
        };
        self.root
            .join("terms")
            .join(format!("{tag}_{year}_{period}.csv"))
    }

    pub fn evaluation(&self, features: FeatureSpec, ext: &str) -> PathBuf {
        self.root.join(format!("evaluation_{features}.{ext}"))
    }

    pub fn comparison(&self, ext: &str) -> PathBuf {
        self.root.join(format!("comparison.{ext}"))
    }

    pub fn plot(&self, year: i32, period: Period) -> PathBuf {
        self.root
            .join("plots")
            .join(format!("period_{year}_{period}.csv"))
    }

    pub fn national_plot(&self) -> PathBuf {
        self.root.join("plots").join("national.csv")
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    if !path.is_file() {
        return Err(Error::Config(format!(
            "{what} {} not found; run the earlier pipeline step first",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::CorruptModel {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_create(path: &Path) -> Result<csv::Writer<File>> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, e.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub dataset: PathBuf,
    pub coverage_file: PathBuf,
    pub rows: usize,
    pub coverage: JoinCoverage,
}

/// Parses, rebases, aggregates and joins the four inputs, then writes the
/// canonical dataset and the join coverage report.
pub fn cmd_build_dataset(config: &ExperimentConfig) -> Result<BuildSummary> {
    config.validate()?;
    config.check_inputs()?;
    let radiance = parse_radiance_csv(&config.radiance)?;
    let gdp = parse_gdp_csv(&config.gdp)?;
    let centroids = parse_centroids_csv(&config.centroids)?;
    let deflators = parse_deflator_csv(&config.deflators, config.base_year)?;
    let gdp = rebase_gdp(&gdp, &deflators)?;
    let means = aggregate_to_period(&radiance, config.frequency);
    let (records, coverage) = join_records(&means, &gdp, &centroids, config.include_incomplete);
    if records.is_empty() {
        return Err(Error::Empty(format!(
            "no {} rows matched across radiance, GDP and centroids",
            match config.frequency {
                Frequency::Quarterly => "quarterly",
                Frequency::Annual => "annual",
            }
        )));
    }
    let artifacts = config.artifacts();
    let dataset = artifacts.dataset();
    ensure_parent(&dataset)?;
    write_dataset_csv(&records, &dataset)?;
    let coverage_file = artifacts.coverage();
    write_json(&coverage_file, &coverage)?;
    Ok(BuildSummary {
        dataset,
        coverage_file,
        rows: records.len(),
        coverage,
    })
}

fn load_dataset(config: &ExperimentConfig) -> Result<Vec<RegionQuarterRecord>> {
    let path = config.artifacts().dataset();
    if !path.is_file() {
        return Err(Error::Config(format!(
            "dataset {} not found; run build-dataset first",
            path.display()
        )));
    }
    parse_dataset_csv(&path)
}

/// Saved linear baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinregDoc {
    pub features: FeatureSpec,
    pub train_years: Vec<i32>,
    pub model: LinearModel,
}

/// Saved per-region ARIMA fits with forecasts over the test years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaDoc {
    pub train_years: Vec<i32>,
    pub horizon: usize,
    pub fits: Vec<FitSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedArtifact {
    pub model: ModelKind,
    pub path: PathBuf,
    pub trace: Option<PathBuf>,
    /// Eval-mode training MSE on the scaled target (network only).
    pub final_loss: Option<f64>,
    pub wall_time: std::time::Duration,
}

/// Steps from `from` to `to`, both `(year, period)` of the same frequency.
fn steps_between(from: (i32, Period), to: (i32, Period)) -> usize {
    let mut key = from;
    let mut n = 0;
    while key < to {
        key = key.1.following(key.0);
        n += 1;
    }
    n
}

fn train_regnl(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
) -> Result<TrainedArtifact> {
    let started = std::time::Instant::now();
    let (train, _) = split_by_years(
        records,
        &config.train_set(),
        &config.test_set(),
        config.features,
    )?;
    let (fit_rows, holdout) = if config.holdout_fraction > 0.0 {
        let (k, h) = holdout_split(&train, config.holdout_fraction, config.seed)?;
        (k, Some(h))
    } else {
        (train, None)
    };
    let scaler = fit_scaler(&fit_rows)?;
    let scaled = transform(&fit_rows, &scaler)?;
    let scaled_holdout = holdout.map(|h| transform(&h, &scaler)).transpose()?;
    let mlp = config.mlp_config();
    let (params, trace) = train_monitored(
        &scaled.x,
        &scaled.y,
        scaled_holdout
            .as_ref()
            .filter(|h| !h.is_empty())
            .map(|h| (&h.x, h.y.as_slice())),
        &mlp,
    )?;
    let artifacts = config.artifacts();
    let path = artifacts.model(ModelKind::Regnl, config.features);
    ensure_parent(&path)?;
    save_model(&params, &scaler, &mlp, &path)?;
    let trace_path = artifacts.trace(config.features);
    let file = File::create(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    trace
        .write_csv(file)
        .map_err(|e| Error::io(&trace_path, e))?;
    Ok(TrainedArtifact {
        model: ModelKind::Regnl,
        path,
        trace: Some(trace_path),
        final_loss: Some(trace.final_loss),
        wall_time: started.elapsed(),
    })
}

fn train_linreg(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
) -> Result<TrainedArtifact> {
    let started = std::time::Instant::now();
    let (train, _) = split_by_years(
        records,
        &config.train_set(),
        &config.test_set(),
        config.features,
    )?;
    let model = ols_fit(&train.x, &train.y, DEFAULT_RIDGE_EPSILON)?;
    let path = config.artifacts().model(ModelKind::Linreg, config.features);
    write_json(
        &path,
        &LinregDoc {
            features: config.features,
            train_years: config.train_years.clone(),
            model,
        },
    )?;
    Ok(TrainedArtifact {
        model: ModelKind::Linreg,
        path,
        trace: None,
        final_loss: None,
        wall_time: started.elapsed(),
    })
}

fn train_arima(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
) -> Result<TrainedArtifact> {
    let started = std::time::Instant::now();
    let train_years = config.train_set();
    let series = series_by_region(records, |y| train_years.contains(&y))?;
    if series.is_empty() {
        return Err(Error::Empty("no training rows for ARIMA".into()));
    }
    let last_test_year = *config.test_set().last().expect("validated");
    let target = records
        .iter()
        .filter(|r| r.year == last_test_year)
        .map(|r| (r.year, r.period))
        .max()
        .ok_or_else(|| Error::Empty(format!("no rows in test year {last_test_year}")))?;
    let horizon = series
        .values()
        .map(|s| steps_between(*s.keys().last().expect("non-empty"), target))
        .max()
        .unwrap_or(0)
        .max(1);
    let fits = forecast_regions(&series, horizon)?;
    let path = config.artifacts().model(ModelKind::Arima, config.features);
    write_json(
        &path,
        &ArimaDoc {
            train_years: config.train_years.clone(),
            horizon,
            fits,
        },
    )?;
    Ok(TrainedArtifact {
        model: ModelKind::Arima,
        path,
        trace: None,
        final_loss: None,
        wall_time: started.elapsed(),
    })
}

/// Trains every requested model on the train years of the built dataset.
pub fn cmd_train(config: &ExperimentConfig) -> Result<Vec<TrainedArtifact>> {
    config.validate()?;
    let records = load_dataset(config)?;
    config
        .sorted_models()
        .into_iter()
        .map(|m| match m {
            ModelKind::Regnl => train_regnl(config, &records),
            ModelKind::Linreg => train_linreg(config, &records),
            ModelKind::Arima => train_arima(config, &records),
        })
        .collect()
}

/// One stored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub region_id: String,
    pub year: i32,
    pub period: Period,
    pub actual: f64,
    pub predicted: f64,
}

const PREDICTION_HEADER: [&str; 5] = ["region_id", "year", "period", "actual", "predicted"];

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv_create(path)?;
    w.write_record(PREDICTION_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.region_id.clone(),
            r.year.to_string(),
            r.period.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != PREDICTION_HEADER {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: PREDICTION_HEADER.join(","),
            found: header.join(","),
        });
    }
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| Error::MalformedRow {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Weighted error and MAPE per period, in period order.
pub fn score_predictions(rows: &[PredictionRow]) -> Result<Vec<PeriodError>> {
    let mut by_period: BTreeMap<(i32, Period), Vec<RegionPrediction>> = BTreeMap::new();
    for r in rows {
        by_period
            .entry((r.year, r.period))
            .or_default()
            .push(RegionPrediction::new(
                r.region_id.clone(),
                r.actual,
                r.predicted,
            ));
    }
    by_period
        .into_iter()
        .map(|((year, period), regions)| {
            let input = EvaluationInput::new(regions)?;
            Ok(PeriodError {
                year,
                period,
                weighted_error: weighted_error(&input).total,
                mape: mape(&input),
                regions: input.regions().len(),
            })
        })
        .collect()
}

fn test_records(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
) -> Result<Vec<RegionQuarterRecord>> {
    let test_years = config.test_set();
    let test: Vec<_> = records
        .iter()
        .filter(|r| test_years.contains(&r.year))
        .cloned()
        .collect();
    if test.is_empty() {
        return Err(Error::Empty(format!(
            "no dataset rows in test years {:?}",
            config.test_years
        )));
    }
    Ok(test)
}

fn rows_from(test: &[RegionQuarterRecord], predicted: Vec<f64>) -> Vec<PredictionRow> {
    test.iter()
        .zip(predicted)
        .map(|(r, p)| PredictionRow {
            region_id: r.region_id.clone(),
            year: r.year,
            period: r.period,
            actual: r.gdp,
            predicted: p,
        })
        .collect()
}

/// Predictions of one trained model for every test row, in dataset order.
pub fn predict_model(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
    model: ModelKind,
    model_file: Option<&Path>,
) -> Result<Vec<PredictionRow>> {
    let test = test_records(config, records)?;
    let default_path = config.artifacts().model(model, config.features);
    let path = model_file.unwrap_or(&default_path);
    match model {
        ModelKind::Regnl => {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "model {} not found; run train first",
                    path.display()
                )));
            }
            let saved = load_model(path)?;
            if saved.scaler.dim() != config.features.dim() {
                return Err(Error::Dimension {
                    expected: config.features.dim(),
                    found: saved.scaler.dim(),
                });
            }
            let refs: Vec<&RegionQuarterRecord> = test.iter().collect();
            let ds = SupervisedDataset::from_records("test", &refs, config.features)?;
            let scaled = transform(&ds, &saved.scaler)?;
            let raw = predict_batch(&scaled.x, &saved.params)?;
            Ok(rows_from(
                &test,
                inverse_transform_target(&raw, &saved.scaler),
            ))
        }
        ModelKind::Linreg => {
            let doc: LinregDoc = read_json(path, "model")?;
            if doc.features != config.features {
                return Err(Error::Dimension {
                    expected: config.features.dim(),
                    found: doc.features.dim(),
                });
            }
            let refs: Vec<&RegionQuarterRecord> = test.iter().collect();
            let ds = SupervisedDataset::from_records("test", &refs, config.features)?;
            Ok(rows_from(&test, linreg_predict(&doc.model, &ds.x)?))
        }
        ModelKind::Arima => {
            let doc: ArimaDoc = read_json(path, "model")?;
            let forecasts: BTreeMap<(&str, i32, Period), f64> = doc
                .fits
                .iter()
                .flat_map(|f| {
                    f.forecasts
                        .iter()
                        .map(move |p| ((f.region.as_str(), p.year, p.period), p.gdp))
                })
                .collect();
            let predicted = test
                .iter()
                .map(|r| {
                    forecasts
                        .get(&(r.region_id.as_str(), r.year, r.period))
                        .copied()
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "no ARIMA forecast for {}; retrain with these test years",
                                r.key()
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(rows_from(&test, predicted))
        }
    }
}

/// Predicts, stores the predictions, then scores the stored file, so every
/// reported number is backed by a prediction CSV.
fn evaluate_model(
    config: &ExperimentConfig,
    records: &[RegionQuarterRecord],
    model: ModelKind,
    model_file: Option<&Path>,
) -> Result<(ModelEvaluation, Vec<PredictionRow>)> {
    let artifacts = config.artifacts();
    let path = artifacts.predictions(model, config.features);
    write_predictions(&path, &predict_model(config, records, model, model_file)?)?;
    let stored = read_predictions(&path)?;
    let periods = score_predictions(&stored)?;
    let average = periods.iter().map(|p| p.weighted_error).sum::<f64>() / periods.len() as f64;
    let relative = path
        .strip_prefix(&artifacts.root)
        .unwrap_or(&path)
        .to_string_lossy()
        .replace('\\', "/");
    Ok((
        ModelEvaluation {
            model,
            features: config.features,
            predictions: relative,
            periods,
            average,
        },
        stored,
    ))
}

fn write_terms(config: &ExperimentConfig, model: ModelKind, rows: &[PredictionRow]) -> Result<()> {
    let mut by_period: BTreeMap<(i32, Period), Vec<RegionPrediction>> = BTreeMap::new();
    for r in rows {
        by_period
            .entry((r.year, r.period))
            .or_default()
            .push(RegionPrediction::new(
                r.region_id.clone(),
                r.actual,
                r.predicted,
            ));
    }
    for ((year, period), regions) in by_period {
        let path = config
            .artifacts()
            .terms(model, config.features, year, period);
        ensure_parent(&path)?;
        weighted_error(&EvaluationInput::new(regions)?).write_terms_csv(&path)?;
    }
    Ok(())
}

fn write_period_table(path: &Path, models: &[ModelEvaluation]) -> Result<()> {
    let mut w = csv_create(path)?;
    w.write_record([
        "model",
        "features",
        "year",
        "period",
        "weighted_error",
        "mape",
        "regions",
    ])
    .map_err(csv_err(path))?;
    for m in models {
        for p in &m.periods {
            w.write_record([
                m.model.to_string(),
                m.features.to_string(),
                p.year.to_string(),
                p.period.to_string(),
                p.weighted_error.to_string(),
                p.mape.to_string(),
                p.regions.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Scores every requested model on the test years and writes the
/// per-period table as CSV, JSON and text. `model_file` replaces the
/// default network model path.
pub fn cmd_evaluate(
    config: &ExperimentConfig,
    model_file: Option<&Path>,
) -> Result<EvaluationReport> {
    config.validate()?;
    let records = load_dataset(config)?;
    let mut models = Vec::new();
    for m in config.sorted_models() {
        let file = if m == ModelKind::Regnl {
            model_file
        } else {
            None
        };
        let (eval, rows) = evaluate_model(config, &records, m, file)?;
        write_terms(config, m, &rows)?;
        models.push(eval);
    }
    let report = EvaluationReport {
        features: config.features,
        models,
        references: ablation_references(),
    };
    let artifacts = config.artifacts();
    write_period_table(
        &artifacts.evaluation(config.features, "csv"),
        &report.models,
    )?;
    write_json(&artifacts.evaluation(config.features, "json"), &report)?;
    write_text(
        &artifacts.evaluation(config.features, "txt"),
        &report.render_text(),
    )?;
    Ok(report)
}

/// Evaluates the requested models side by side and emits one plot CSV per
/// test period plus the national totals.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let records = load_dataset(config)?;
    let kinds = config.sorted_models();
    let mut models = Vec::new();
    let mut predictions = Vec::new();
    for &m in &kinds {
        let (eval, rows) = evaluate_model(config, &records, m, None)?;
        models.push(eval);
        predictions.push(rows);
    }
    let first = &predictions[0];
    for (k, rows) in kinds.iter().zip(&predictions).skip(1) {
        let same = rows.len() == first.len()
            && rows.iter().zip(first).all(|(a, b)| {
                (a.region_id.as_str(), a.year, a.period) == (b.region_id.as_str(), b.year, b.period)
            });
        if !same {
            return Err(Error::Schema(format!(
                "{k} predictions cover different rows than {}",
                kinds[0]
            )));
        }
    }
    let mut rows: Vec<PlotRow> = first
        .iter()
        .enumerate()
        .map(|(i, r)| PlotRow {
            year: r.year,
            period: r.period,
            region: r.region_id.clone(),
            actual: r.actual,
            predicted: predictions.iter().map(|p| p[i].predicted).collect(),
        })
        .collect();
    rows.sort_by(|a, b| (a.year, a.period, &a.region).cmp(&(b.year, b.period, &b.region)));

    let artifacts = config.artifacts();
    let mut header = vec!["region".to_string(), "actual".to_string()];
    header.extend(kinds.iter().map(|k| format!("predicted_{k}")));
    let mut plot_files = Vec::new();
    let mut national: BTreeMap<(i32, Period), (f64, Vec<f64>)> = BTreeMap::new();
    for chunk in rows.chunk_by(|a, b| (a.year, a.period) == (b.year, b.period)) {
        let (year, period) = (chunk[0].year, chunk[0].period);
        let path = artifacts.plot(year, period);
        let mut w = csv_create(&path)?;
        w.write_record(&header).map_err(csv_err(&path))?;
        let total = national
            .entry((year, period))
            .or_insert((0.0, vec![0.0; kinds.len()]));
        for r in chunk {
            let mut rec = vec![r.region.clone(), r.actual.to_string()];
            rec.extend(r.predicted.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err(&path))?;
            total.0 += r.actual;
            for (t, p) in total.1.iter_mut().zip(&r.predicted) {
                *t += p;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        plot_files.push(format!("plots/period_{year}_{period}.csv"));
    }
    let path = artifacts.national_plot();
    let mut w = csv_create(&path)?;
    let mut nat_header = vec![
        "year".to_string(),
        "period".to_string(),
        "actual".to_string(),
    ];
    nat_header.extend(kinds.iter().map(|k| format!("predicted_{k}")));
    w.write_record(&nat_header).map_err(csv_err(&path))?;
    for ((year, period), (actual, preds)) in &national {
        let mut rec = vec![year.to_string(), period.to_string(), actual.to_string()];
        rec.extend(preds.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    plot_files.push("plots/national.csv".into());

    let report = ComparisonReport {
        features: config.features,
        models,
        rows,
        plot_files,
        references: comparison_references(),
    };
    write_period_table(&artifacts.comparison("csv"), &report.models)?;
    write_json(&artifacts.comparison("json"), &report)?;
    write_text(&artifacts.comparison("txt"), &report.render_text())?;
    Ok(report)
}

/// Recomputes every weighted error in `report` from the stored prediction
/// files under `root` and fails on the first mismatch.
pub fn verify_report(models: &[ModelEvaluation], root: &Path) -> Result<()> {
    for m in models {
        let path = root.join(&m.predictions);
        let recomputed = score_predictions(&read_predictions(&path)?)?;
        if recomputed != m.periods {
            return Err(Error::validation(
                path.display().to_string(),
                format!("stored predictions do not reproduce the {} report", m.model),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &Path) -> ExperimentConfig {
        let spec = SimulationSpec {
            regions: 5,
            train_periods: 8,
            test_periods: 4,
            start_year: 2017,
            noise: 0.01,
            disruption: None,
            seed: 4,
            ..SimulationSpec::default()
        };
        let files = cmd_simulate(&spec, dir).unwrap();
        let mut config = ExperimentConfig::from_file(&files.config).unwrap();
        config.mlp.epochs = 50;
        config.models = ModelKind::ALL.to_vec();
        config
    }

    #[test]
    fn config_precedence_and_path_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"seed": 9, "features": "nightlight", "radiance": "data/r.csv"}"#,
        )
        .unwrap();
        let c = ExperimentConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.features, FeatureSpec::NIGHTLIGHT_ONLY);
        assert_eq!(c.radiance, dir.path().join("data/r.csv"));
        assert_eq!(c.train_years, (2014..=2018).collect::<Vec<_>>());
        let o = Overrides {
            seed: Some(1),
            features: Some(FeatureSpec::FULL),
            model: Some(ModelKind::Linreg),
            out_dir: Some("elsewhere".into()),
        };
        let c = ExperimentConfig::load(Some(&path), &o).unwrap();
        assert_eq!(
            (c.seed, c.features, c.models.clone()),
            (1, FeatureSpec::FULL, vec![ModelKind::Linreg])
        );
        assert_eq!(c.out_dir, PathBuf::from("elsewhere"));
        std::fs::write(&path, r#"{"sed": 9}"#).unwrap();
        assert!(matches!(
            ExperimentConfig::from_file(&path),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(bad(|c| c.train_years.clear()), Error::Config(_)));
        assert!(matches!(
            bad(|c| c.test_years = vec![2018]),
            Error::Config(_)
        ));
        assert!(matches!(
            bad(|c| c.models = vec![ModelKind::Arima, ModelKind::Arima]),
            Error::Config(_)
        ));
        assert!(matches!(
            bad(|c| c.mlp.learning_rate = 0.0),
            Error::Config(_)
        ));
        assert_eq!(bad(|c| c.train_years.clear()).exit_code(), 1);
    }

    #[test]
    fn missing_input_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        std::fs::remove_file(&config.centroids).unwrap();
        let err = cmd_build_dataset(&config).unwrap_err();
        assert!(err.to_string().contains("centroids.csv"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn commands_require_earlier_steps() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        assert!(matches!(cmd_train(&config), Err(Error::Config(_))));
        cmd_build_dataset(&config).unwrap();
        assert!(matches!(cmd_evaluate(&config, None), Err(Error::Config(_))));
    }

    #[test]
    fn pipeline_on_a_tiny_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        let built = cmd_build_dataset(&config).unwrap();
        assert_eq!(built.rows, 5 * 12);
        let trained = cmd_train(&config).unwrap();
        assert_eq!(trained.len(), 3);
        let report = cmd_evaluate(&config, None).unwrap();
        assert_eq!(report.models.len(), 3);
        for m in &report.models {
            assert_eq!(m.periods.len(), 4);
            assert!(m
                .periods
                .iter()
                .all(|p| p.regions == 5 && p.weighted_error.is_finite()));
        }
        verify_report(&report.models, &config.out_dir).unwrap();
        for ext in ["csv", "json", "txt"] {
            assert!(config
                .artifacts()
                .evaluation(FeatureSpec::FULL, ext)
                .is_file());
        }

        config.models = vec![ModelKind::Regnl, ModelKind::Arima];
        let cmp = cmd_compare(&config).unwrap();
        assert_eq!(cmp.models.len(), 2);
        assert_eq!(cmp.rows.len(), 20);
        let plot =
            std::fs::read_to_string(config.artifacts().plot(2019, Period::Quarter(3))).unwrap();
        assert_eq!(
            plot.lines().next().unwrap(),
            "region,actual,predicted_regnl,predicted_arima"
        );
        assert_eq!(plot.lines().count(), 6);
        verify_report(&cmp.models, &config.out_dir).unwrap();

        config.models = vec![ModelKind::Linreg];
        let single = cmd_compare(&config).unwrap();
        assert_eq!(single.models.len(), 1);
        assert!(single.render_text().contains("linreg"));
    }

    #[test]
    fn nightlight_model_has_one_input() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.features = FeatureSpec::NIGHTLIGHT_ONLY;
        config.models = vec![ModelKind::Regnl];
        cmd_build_dataset(&config).unwrap();
        let trained = cmd_train(&config).unwrap();
        let saved = load_model(&trained[0].path).unwrap();
        assert_eq!(saved.config.input_dim, 1);
        assert_eq!(saved.params.input_dim(), 1);
        let mut full = config.clone();
        full.features = FeatureSpec::FULL;
        assert!(matches!(
            predict_model(
                &full,
                &parse_dataset_csv(config.artifacts().dataset()).unwrap(),
                ModelKind::Regnl,
                Some(&trained[0].path)
            ),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn perfect_predictions_score_zero() {
        let rows: Vec<PredictionRow> = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(i, r)| PredictionRow {
                region_id: r.to_string(),
                year: 2019,
                period: Period::Quarter(1 + i as u8 % 2),
                actual: 10.0 + i as f64,
                predicted: 10.0 + i as f64,
            })
            .collect();
        let scored = score_predictions(&rows).unwrap();
        assert_eq!(scored.len(), 2);
        assert!(scored
            .iter()
            .all(|p| p.weighted_error == 0.0 && p.mape == 0.0));
    }

    #[test]
    fn tampered_predictions_fail_verification() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.models = vec![ModelKind::Linreg];
        cmd_build_dataset(&config).unwrap();
        cmd_train(&config).unwrap();
        let report = cmd_evaluate(&config, None).unwrap();
        let path = config.out_dir.join(&report.models[0].predictions);
        let mut rows = read_predictions(&path).unwrap();
        rows[0].predicted *= 1.5;
        write_predictions(&path, &rows).unwrap();
        assert!(verify_report(&report.models, &config.out_dir).is_err());
    }

    #[test]
    fn steps_between_quarters() {
        assert_eq!(
            steps_between((2018, Period::Quarter(4)), (2020, Period::Quarter(4))),
            8
        );
        assert_eq!(
            steps_between((2018, Period::Annual), (2020, Period::Annual)),
            2
        );
    }
}
