//! Synthetic scenarios with a known radiance-to-GDP link.
//!
//! Every region gets a centroid, a base radiance level, a growth rate and a
//! seasonal phase. Period GDP is [`gdp_surface`] of the period's mean radiance
//! and the centroid, times `1 + noise · z` with `z` standard normal. A
//! disruption multiplies the radiance of one test period by the severity,
//! which scales GDP by the same factor because the surface is linear in
//! radiance.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::ingest::{
    Frequency, GdpObservation, Period, RadianceSample, RegionCentroid, CENTROID_HEADER,
    DEFAULT_BASE_YEAR, DEFLATOR_HEADER, GDP_HEADER, RADIANCE_HEADER,
};

/// GDP per unit of radiance at `g = 1`, in millions.
const GDP_SCALE: f64 = 25_000.0;
const LAT_RANGE: (f64, f64) = (25.0, 49.0);
const LON_RANGE: (f64, f64) = (-124.0, -67.0);
const BASE_RADIANCE: (f64, f64) = (1.0, 8.0);
const GROWTH_PER_PERIOD: (f64, f64) = (0.002, 0.008);
const SEASONAL_AMPLITUDE: f64 = 0.03;
/// Month-to-month radiance ramp inside a period, relative to its level.
const MONTH_RAMP: f64 = 0.02;
const DEFLATOR_GROWTH: f64 = 1.02;

/// The fixed GDP surface: linear in radiance, smooth and positive in the
/// centroid.
pub fn gdp_surface(nightlight: f64, latitude: f64, longitude: f64) -> f64 {
    let geo = 1.0 * (latitude - 37.0) / 12.0 + 0.8 * (longitude + 95.5) / 28.5;
    GDP_SCALE * nightlight * geo.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disruption {
    /// 1-based index into the test periods.
    pub test_period: usize,
    /// Fraction of activity that remains, in `(0, 1]`.
    pub severity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub regions: usize,
    pub train_periods: usize,
    pub test_periods: usize,
    pub start_year: i32,
    pub frequency: Frequency,
    /// Standard deviation of the multiplicative GDP noise.
    pub noise: f64,
    pub disruption: Option<Disruption>,
    pub seed: u64,
}

impl Default for SimulationSpec {
    /// 50 regions, 2014-2018 for training, 2019-2020 for testing, 1% noise,
    /// severity 0.85 in the sixth test quarter (2020 Q2).
    fn default() -> Self {
        SimulationSpec {
            regions: 50,
            train_periods: 20,
            test_periods: 8,
            start_year: 2014,
            frequency: Frequency::Quarterly,
            noise: 0.01,
            disruption: Some(Disruption {
                test_period: 6,
                severity: 0.85,
            }),
            seed: 0,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let per_year = usize::from(self.frequency.periods_per_year());
        if self.regions == 0 || self.train_periods == 0 || self.test_periods == 0 {
            return Err(Error::Config(
                "simulation needs at least one region, train period and test period".into(),
            ));
        }
        if !self.train_periods.is_multiple_of(per_year)
            || !self.test_periods.is_multiple_of(per_year)
        {
            return Err(Error::Config(format!(
                "train and test periods must be whole years ({per_year} periods each)"
            )));
        }
        if !(self.noise >= 0.0 && self.noise < 0.5) {
            return Err(Error::Config(format!(
                "noise {} outside [0, 0.5)",
                self.noise
            )));
        }
        if let Some(d) = self.disruption {
            if !(d.severity > 0.0 && d.severity <= 1.0) {
                return Err(Error::Config(format!(
                    "disruption severity {} outside (0, 1]",
                    d.severity
                )));
            }
            if d.test_period == 0 || d.test_period > self.test_periods {
                return Err(Error::Config(format!(
                    "disruption test period {} outside 1..={}",
                    d.test_period, self.test_periods
                )));
            }
        }
        Ok(())
    }

    pub fn train_years(&self) -> BTreeSet<i32> {
        let years = self.train_periods / usize::from(self.frequency.periods_per_year());
        (self.start_year..self.start_year + years as i32).collect()
    }

    pub fn test_years(&self) -> BTreeSet<i32> {
        let per_year = usize::from(self.frequency.periods_per_year());
        let first = self.start_year + (self.train_periods / per_year) as i32;
        (first..first + (self.test_periods / per_year) as i32).collect()
    }

    /// `(year, period)` of every simulated period, oldest first.
    pub fn period_keys(&self) -> Vec<(i32, Period)> {
        let periods = self.frequency.periods();
        let mut key = (self.start_year, periods[0]);
        let mut keys = Vec::with_capacity(self.train_periods + self.test_periods);
        for _ in 0..self.train_periods + self.test_periods {
            keys.push(key);
            key = key.1.following(key.0);
        }
        keys
    }

    /// Key of the disrupted period, if any.
    pub fn disruption_key(&self) -> Option<(i32, Period)> {
        self.disruption
            .map(|d| self.period_keys()[self.train_periods + d.test_period - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub radiance: Vec<RadianceSample>,
    pub gdp: Vec<GdpObservation>,
    pub centroids: Vec<RegionCentroid>,
    pub deflators: BTreeMap<i32, f64>,
}

impl SimulatedData {
    /// Sum of GDP over regions for one period.
    pub fn national(&self, year: i32, period: Period) -> f64 {
        self.gdp
            .iter()
            .filter(|g| g.year == year && g.period == period)
            .map(|g| g.gdp)
            .sum()
    }
}

struct RegionProfile {
    centroid: RegionCentroid,
    base: f64,
    growth: f64,
    phase: f64,
}

/// Period mean in the same order and arithmetic as the ingest aggregation.
fn period_mean(months: &[f64]) -> f64 {
    months.iter().sum::<f64>() / months.len() as f64
}

/// Generates the scenario in memory. The random stream depends only on the
/// seed and the counts, so toggling the disruption or the noise level leaves
/// every other draw unchanged.
pub fn generate(spec: &SimulationSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.regions.to_string().len().max(2);
    let profiles: Vec<RegionProfile> = (0..spec.regions)
        .map(|i| RegionProfile {
            centroid: RegionCentroid {
                region_id: format!("R{:0width$}", i + 1),
                latitude: rng.gen_range(LAT_RANGE.0..LAT_RANGE.1),
                longitude: rng.gen_range(LON_RANGE.0..LON_RANGE.1),
            },
            base: rng.gen_range(BASE_RADIANCE.0..BASE_RADIANCE.1),
            growth: rng.gen_range(GROWTH_PER_PERIOD.0..GROWTH_PER_PERIOD.1),
            phase: rng.gen_range(0.0..2.0 * PI),
        })
        .collect();

    let keys = spec.period_keys();
    let disrupted = spec.disruption_key();
    let severity = spec.disruption.map_or(1.0, |d| d.severity);
    let months_per = usize::from(spec.frequency.months_per_period());
    let per_year = f64::from(spec.frequency.periods_per_year());

    let mut radiance = Vec::with_capacity(spec.regions * keys.len() * months_per);
    let mut gdp = Vec::with_capacity(spec.regions * keys.len());
    for p in &profiles {
        for (t, &(year, period)) in keys.iter().enumerate() {
            let season = 1.0
                + SEASONAL_AMPLITUDE
                    * (2.0 * PI * f64::from(period.index_in_year()) / per_year + p.phase).sin();
            let mut level = p.base * (1.0 + p.growth * t as f64) * season;
            if Some((year, period)) == disrupted {
                level *= severity;
            }
            let first_month = period.index_in_year() * spec.frequency.months_per_period() + 1;
            let months: Vec<f64> = (0..months_per)
                .map(|k| {
                    let offset = k as f64 - (months_per as f64 - 1.0) / 2.0;
                    level * (1.0 + MONTH_RAMP * offset)
                })
                .collect();
            for (k, &v) in months.iter().enumerate() {
                radiance.push(RadianceSample {
                    region_id: p.centroid.region_id.clone(),
                    year,
                    month: first_month + k as u8,
                    mean_radiance: v,
                });
            }
            let z: f64 = rng.sample(StandardNormal);
            let clean = gdp_surface(
                period_mean(&months),
                p.centroid.latitude,
                p.centroid.longitude,
            );
            let value = if spec.noise == 0.0 {
                clean
            } else {
                clean * (1.0 + spec.noise * z).max(0.05)
            };
            gdp.push(GdpObservation {
                region_id: p.centroid.region_id.clone(),
                year,
                period,
                gdp: value,
                base_year: DEFAULT_BASE_YEAR,
            });
        }
    }

    let last_year = keys.last().map_or(spec.start_year, |k| k.0);
    let deflators = (DEFAULT_BASE_YEAR.min(spec.start_year)..=last_year)
        .map(|y| (y, DEFLATOR_GROWTH.powi(y - DEFAULT_BASE_YEAR)))
        .collect();
    Ok(SimulatedData {
        radiance,
        gdp,
        centroids: profiles.into_iter().map(|p| p.centroid).collect(),
        deflators,
    })
}

/// Files written by [`cmd_simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFiles {
    pub radiance: PathBuf,
    pub gdp: PathBuf,
    pub centroids: PathBuf,
    pub deflators: PathBuf,
    /// Experiment config pointing at the files above, with the scenario's
    /// train and test years.
    pub config: PathBuf,
    pub spec: PathBuf,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the four input tables, the scenario spec and a matching
/// experiment config into `out_dir`.
pub fn cmd_simulate(spec: &SimulationSpec, out_dir: &Path) -> Result<SimulationFiles> {
    let data = generate(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = SimulationFiles {
        radiance: out_dir.join("radiance.csv"),
        gdp: out_dir.join("gdp.csv"),
        centroids: out_dir.join("centroids.csv"),
        deflators: out_dir.join("deflators.csv"),
        config: out_dir.join("config.json"),
        spec: out_dir.join("scenario.json"),
    };
    write_rows(
        &files.radiance,
        &RADIANCE_HEADER,
        data.radiance.iter().map(|s| {
            [
                s.region_id.clone(),
                s.year.to_string(),
                s.month.to_string(),
                s.mean_radiance.to_string(),
            ]
        }),
    )?;
    write_rows(
        &files.gdp,
        &GDP_HEADER,
        data.gdp.iter().map(|g| {
            [
                g.region_id.clone(),
                g.year.to_string(),
                g.period.to_string(),
                g.gdp.to_string(),
                g.base_year.to_string(),
            ]
        }),
    )?;
    write_rows(
        &files.centroids,
        &CENTROID_HEADER,
        data.centroids.iter().map(|c| {
            [
                c.region_id.clone(),
                c.latitude.to_string(),
                c.longitude.to_string(),
            ]
        }),
    )?;
    write_rows(
        &files.deflators,
        &DEFLATOR_HEADER,
        data.deflators
            .iter()
            .map(|(y, v)| [y.to_string(), v.to_string()]),
    )?;

    let config = ExperimentConfig {
        radiance: "radiance.csv".into(),
        gdp: "gdp.csv".into(),
        centroids: "centroids.csv".into(),
        deflators: "deflators.csv".into(),
        frequency: spec.frequency,
        train_years: spec.train_years().into_iter().collect(),
        test_years: spec.test_years().into_iter().collect(),
        seed: spec.seed,
        out_dir: "run".into(),
        ..ExperimentConfig::default()
    };
    super::write_json(&files.config, &config)?;
    super::write_json(&files.spec, spec)?;
    Ok(files)
}
