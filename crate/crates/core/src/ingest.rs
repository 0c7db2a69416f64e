//! Parsing, aggregation, rebasing and joining of the raw input tables.
//!
//! Four inputs arrive as CSV: monthly mean radiance per region, GDP per region
//! and period, a deflator index per year, and one centroid per region. The
//! pipeline is
//!
//! ```text
//! radiance --aggregate_to_period--+
//! gdp --rebase_gdp----------------+--join_records--> Vec<RegionQuarterRecord>
//! centroids ----------------------+
//! ```
//!
//! Every stage keeps rows in canonical `(region_id, year, period)` order so
//! downstream runs do not depend on input file order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Valid range of the average day/night band radiance, nW/cm²/sr.
pub const RADIANCE_MIN: f64 = -1.5;
pub const RADIANCE_MAX: f64 = 193_565.0;

/// Base year all GDP values are expressed in.
pub const DEFAULT_BASE_YEAR: i32 = 2011;

pub const RADIANCE_HEADER: [&str; 4] = ["region_id", "year", "month", "mean_radiance"];
pub const GDP_HEADER: [&str; 5] = ["region_id", "year", "period", "nominal_gdp", "base_year"];
pub const CENTROID_HEADER: [&str; 3] = ["region_id", "latitude", "longitude"];
pub const DEFLATOR_HEADER: [&str; 2] = ["year", "deflator_index"];
pub const DATASET_HEADER: [&str; 7] = [
    "region_id",
    "year",
    "period",
    "latitude",
    "longitude",
    "mean_nightlight",
    "gdp",
];

/// A reporting period within a year: one of four quarters, or the whole year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Period {
    Quarter(u8),
    Annual,
}

impl Period {
    pub fn frequency(self) -> Frequency {
        match self {
            Period::Quarter(_) => Frequency::Quarterly,
            Period::Annual => Frequency::Annual,
        }
    }

    /// Period containing calendar month `month` (1-12) at the given frequency.
    pub fn containing_month(month: u8, frequency: Frequency) -> Period {
        match frequency {
            Frequency::Quarterly => Period::Quarter((month - 1) / 3 + 1),
            Frequency::Annual => Period::Annual,
        }
    }

    /// Zero-based position of the period inside its year.
    pub fn index_in_year(self) -> u8 {
        match self {
            Period::Quarter(q) => q - 1,
            Period::Annual => 0,
        }
    }

    /// The `(year, period)` immediately after this one.
    pub fn following(self, year: i32) -> (i32, Period) {
        match self {
            Period::Quarter(4) | Period::Annual => (year + 1, self.first_of_year()),
            Period::Quarter(q) => (year, Period::Quarter(q + 1)),
        }
    }

    fn first_of_year(self) -> Period {
        match self {
            Period::Quarter(_) => Period::Quarter(1),
            Period::Annual => Period::Annual,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Quarter(q) => write!(f, "Q{q}"),
            Period::Annual => f.write_str("A"),
        }
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Q1" => Ok(Period::Quarter(1)),
            "Q2" => Ok(Period::Quarter(2)),
            "Q3" => Ok(Period::Quarter(3)),
            "Q4" => Ok(Period::Quarter(4)),
            "A" => Ok(Period::Annual),
            other => Err(format!("unknown period {other:?} (expected Q1..Q4 or A)")),
        }
    }
}

impl From<Period> for String {
    fn from(p: Period) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Period {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Quarterly,
    Annual,
}

impl Frequency {
    pub fn periods_per_year(self) -> u8 {
        match self {
            Frequency::Quarterly => 4,
            Frequency::Annual => 1,
        }
    }

    pub fn months_per_period(self) -> u8 {
        12 / self.periods_per_year()
    }

    pub fn periods(self) -> Vec<Period> {
        match self {
            Frequency::Quarterly => (1..=4).map(Period::Quarter).collect(),
            Frequency::Annual => vec![Period::Annual],
        }
    }
}

impl FromStr for Frequency {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "quarterly" => Ok(Frequency::Quarterly),
            "annual" => Ok(Frequency::Annual),
            other => Err(format!("unknown frequency {other:?}")),
        }
    }
}

/// Canonical row key. The derived ordering is the canonical ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub region_id: String,
    pub year: i32,
    pub period: Period,
}

impl RecordKey {
    pub fn new(region_id: impl Into<String>, year: i32, period: Period) -> Self {
        RecordKey {
            region_id: region_id.into(),
            year,
            period,
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.region_id, self.year, self.period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadianceSample {
    pub region_id: String,
    pub year: i32,
    pub month: u8,
    pub mean_radiance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdpObservation {
    pub region_id: String,
    pub year: i32,
    pub period: Period,
    /// GDP in millions of currency units, in prices of `base_year`.
    pub gdp: f64,
    pub base_year: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCentroid {
    pub region_id: String,
    pub latitude: f64,
    pub longitude: f64,
}

/// Price deflator per year, normalized so the base year has index 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatorTable {
    base_year: i32,
    index: BTreeMap<i32, f64>,
}

impl DeflatorTable {
    /// Normalizes `raw` by its value at `base_year`.
    pub fn new(raw: BTreeMap<i32, f64>, base_year: i32) -> Result<Self> {
        for (&year, &value) in &raw {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(
                    format!("deflator {year}"),
                    format!("index must be positive, got {value}"),
                ));
            }
        }
        let base = *raw
            .get(&base_year)
            .ok_or(Error::MissingDeflator { year: base_year })?;
        let index = raw.into_iter().map(|(y, v)| (y, v / base)).collect();
        Ok(DeflatorTable { base_year, index })
    }

    pub fn base_year(&self) -> i32 {
        self.base_year
    }

    pub fn index(&self, year: i32) -> Option<f64> {
        self.index.get(&year).copied()
    }

    pub fn years(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.index.iter().map(|(&y, &v)| (y, v))
    }
}

/// One joined dataset row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionQuarterRecord {
    pub region_id: String,
    pub year: i32,
    pub period: Period,
    pub latitude: f64,
    pub longitude: f64,
    pub mean_nightlight: f64,
    pub gdp: f64,
}

impl RegionQuarterRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey::new(self.region_id.clone(), self.year, self.period)
    }

    fn sort_key(&self) -> (&str, i32, Period) {
        (&self.region_id, self.year, self.period)
    }

    fn validate(&self, context: &str) -> Result<()> {
        check_latitude(self.latitude, context)?;
        check_longitude(self.longitude, context)?;
        check_radiance(self.mean_nightlight, context)?;
        check_gdp(self.gdp, context)
    }
}

/// Period-average radiance with its month coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMean {
    pub mean_nightlight: f64,
    pub months_observed: u8,
    /// False when fewer months than the period length were present.
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncompletePeriod {
    pub key: String,
    pub months_observed: u8,
}

/// What the inner join kept and dropped, per side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinCoverage {
    pub joined: usize,
    pub gdp_without_radiance: Vec<String>,
    pub radiance_without_gdp: Vec<String>,
    /// Keys present in both radiance and GDP whose region has no centroid.
    pub dropped_for_missing_centroid: Vec<String>,
    pub regions_without_centroid: Vec<String>,
    pub unused_centroids: Vec<String>,
    pub incomplete_periods: Vec<IncompletePeriod>,
    /// Number of matched keys dropped because their period was incomplete.
    pub incomplete_excluded: usize,
}

fn check_radiance(value: f64, context: &str) -> Result<()> {
    if !(RADIANCE_MIN..=RADIANCE_MAX).contains(&value) {
        return Err(Error::validation(
            context,
            format!("radiance {value} outside [{RADIANCE_MIN}, {RADIANCE_MAX}]"),
        ));
    }
    Ok(())
}

fn check_gdp(value: f64, context: &str) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::validation(
            context,
            format!("GDP must be positive, got {value}"),
        ));
    }
    Ok(())
}

fn check_latitude(value: f64, context: &str) -> Result<()> {
    if !(-90.0..=90.0).contains(&value) {
        return Err(Error::validation(
            context,
            format!("latitude {value} outside [-90, 90]"),
        ));
    }
    Ok(())
}

fn check_longitude(value: f64, context: &str) -> Result<()> {
    if !(-180.0..=180.0).contains(&value) {
        return Err(Error::validation(
            context,
            format!("longitude {value} outside [-180, 180]"),
        ));
    }
    Ok(())
}

struct CsvRows<R: Read> {
    reader: csv::Reader<R>,
    path: std::path::PathBuf,
}

impl<R: Read> CsvRows<R> {
    fn new(input: R, path: &Path, expected: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers().map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        let found: Vec<&str> = headers.iter().collect();
        if found != expected {
            return Err(Error::Header {
                path: path.to_path_buf(),
                expected: expected.join(","),
                found: found.join(","),
            });
        }
        Ok(CsvRows {
            reader,
            path: path.to_path_buf(),
        })
    }

    /// Calls `f(line, record)` for every data row.
    fn for_each(mut self, mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    f(line, &record)?;
                }
                Ok(false) => return Ok(()),
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    return Err(Error::MalformedRow {
                        path: self.path.clone(),
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
}

fn field<T: FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    path: &Path,
    line: u64,
) -> Result<T>
where
    T::Err: fmt::Display,
{
    let raw = record.get(idx).unwrap_or("");
    raw.parse::<T>().map_err(|e| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message: format!("field `{name}` = {raw:?}: {e}"),
    })
}

fn text_field(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    path: &Path,
    line: u64,
) -> Result<String> {
    match record.get(idx) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: format!("field `{name}` is empty"),
        }),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn row_context(path: &Path, line: u64) -> String {
    format!("{}:{line}", path.display())
}

pub fn parse_radiance_csv(path: impl AsRef<Path>) -> Result<Vec<RadianceSample>> {
    let path = path.as_ref();
    read_radiance(open(path)?, path)
}

/// Reads radiance rows from any reader; `path` is used in error messages.
pub fn read_radiance<R: Read>(input: R, path: &Path) -> Result<Vec<RadianceSample>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    CsvRows::new(input, path, &RADIANCE_HEADER)?.for_each(|line, rec| {
        let region_id = text_field(rec, 0, "region_id", path, line)?;
        let year: i32 = field(rec, 1, "year", path, line)?;
        let month: u8 = field(rec, 2, "month", path, line)?;
        let mean_radiance: f64 = field(rec, 3, "mean_radiance", path, line)?;
        let ctx = row_context(path, line);
        if !(1..=12).contains(&month) {
            return Err(Error::validation(
                ctx,
                format!("month {month} outside 1..=12"),
            ));
        }
        check_radiance(mean_radiance, &ctx)?;
        if !seen.insert((region_id.clone(), year, month)) {
            return Err(Error::DuplicateKey {
                context: ctx,
                key: format!("{region_id}/{year}/{month}"),
            });
        }
        out.push(RadianceSample {
            region_id,
            year,
            month,
            mean_radiance,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_gdp_csv(path: impl AsRef<Path>) -> Result<Vec<GdpObservation>> {
    let path = path.as_ref();
    read_gdp(open(path)?, path)
}

pub fn read_gdp<R: Read>(input: R, path: &Path) -> Result<Vec<GdpObservation>> {
    let mut out = Vec::new();
    let mut kinds: BTreeMap<String, Frequency> = BTreeMap::new();
    let mut seen = HashSet::new();
    CsvRows::new(input, path, &GDP_HEADER)?.for_each(|line, rec| {
        let region_id = text_field(rec, 0, "region_id", path, line)?;
        let year: i32 = field(rec, 1, "year", path, line)?;
        let period: Period = field(rec, 2, "period", path, line)?;
        let gdp: f64 = field(rec, 3, "nominal_gdp", path, line)?;
        let base_year: i32 = field(rec, 4, "base_year", path, line)?;
        let ctx = row_context(path, line);
        check_gdp(gdp, &ctx)?;
        let kind = *kinds.entry(region_id.clone()).or_insert(period.frequency());
        if kind != period.frequency() {
            return Err(Error::Schema(format!(
                "{ctx}: region {region_id} mixes quarterly and annual periods"
            )));
        }
        if !seen.insert((region_id.clone(), year, period)) {
            return Err(Error::DuplicateKey {
                context: ctx,
                key: format!("{region_id}/{year}/{period}"),
            });
        }
        out.push(GdpObservation {
            region_id,
            year,
            period,
            gdp,
            base_year,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_centroids_csv(path: impl AsRef<Path>) -> Result<Vec<RegionCentroid>> {
    let path = path.as_ref();
    read_centroids(open(path)?, path)
}

pub fn read_centroids<R: Read>(input: R, path: &Path) -> Result<Vec<RegionCentroid>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    CsvRows::new(input, path, &CENTROID_HEADER)?.for_each(|line, rec| {
        let region_id = text_field(rec, 0, "region_id", path, line)?;
        let latitude: f64 = field(rec, 1, "latitude", path, line)?;
        let longitude: f64 = field(rec, 2, "longitude", path, line)?;
        let ctx = row_context(path, line);
        check_latitude(latitude, &ctx)?;
        check_longitude(longitude, &ctx)?;
        if !seen.insert(region_id.clone()) {
            return Err(Error::DuplicateKey {
                context: ctx,
                key: region_id,
            });
        }
        out.push(RegionCentroid {
            region_id,
            latitude,
            longitude,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_deflator_csv(path: impl AsRef<Path>, base_year: i32) -> Result<DeflatorTable> {
    let path = path.as_ref();
    read_deflators(open(path)?, path, base_year)
}

pub fn read_deflators<R: Read>(input: R, path: &Path, base_year: i32) -> Result<DeflatorTable> {
    let mut raw = BTreeMap::new();
    CsvRows::new(input, path, &DEFLATOR_HEADER)?.for_each(|line, rec| {
        let year: i32 = field(rec, 0, "year", path, line)?;
        let index: f64 = field(rec, 1, "deflator_index", path, line)?;
        if raw.insert(year, index).is_some() {
            return Err(Error::DuplicateKey {
                context: row_context(path, line),
                key: year.to_string(),
            });
        }
        Ok(())
    })?;
    DeflatorTable::new(raw, base_year)
}

/// Expresses every observation in prices of the table's base year.
///
/// Observations already reported in the table's base year pass through
/// untouched, which makes the operation idempotent. All others are treated as
/// current-price values and divided by the deflator of their own year.
pub fn rebase_gdp(
    observations: &[GdpObservation],
    deflators: &DeflatorTable,
) -> Result<Vec<GdpObservation>> {
    observations
        .iter()
        .map(|obs| {
            let index = deflators
                .index(obs.year)
                .ok_or(Error::MissingDeflator { year: obs.year })?;
            if obs.base_year == deflators.base_year() {
                return Ok(obs.clone());
            }
            Ok(GdpObservation {
                gdp: obs.gdp / index,
                base_year: deflators.base_year(),
                ..obs.clone()
            })
        })
        .collect()
}

/// Averages monthly radiance into periods of the given frequency.
///
/// Periods with no months are absent. The sum is taken in month order, so the
/// result does not depend on the order of `samples`.
pub fn aggregate_to_period(
    samples: &[RadianceSample],
    frequency: Frequency,
) -> BTreeMap<RecordKey, PeriodMean> {
    let mut grouped: BTreeMap<RecordKey, Vec<(u8, f64)>> = BTreeMap::new();
    for s in samples {
        let key = RecordKey::new(
            s.region_id.clone(),
            s.year,
            Period::containing_month(s.month, frequency),
        );
        grouped
            .entry(key)
            .or_default()
            .push((s.month, s.mean_radiance));
    }
    let full = frequency.months_per_period();
    grouped
        .into_iter()
        .map(|(key, mut months)| {
            months.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let sum: f64 = months.iter().map(|&(_, v)| v).sum();
            let distinct = months
                .iter()
                .map(|&(m, _)| m)
                .collect::<BTreeSet<_>>()
                .len() as u8;
            let mean = PeriodMean {
                mean_nightlight: sum / months.len() as f64,
                months_observed: distinct,
                complete: distinct >= full,
            };
            (key, mean)
        })
        .collect()
}

/// Inner join of period radiance, GDP and centroids on `(region, year, period)`.
///
/// Incomplete periods are dropped unless `include_incomplete` is set; either
/// way they are listed in the coverage report. Output is in canonical order.
pub fn join_records(
    radiance: &BTreeMap<RecordKey, PeriodMean>,
    gdp: &[GdpObservation],
    centroids: &[RegionCentroid],
    include_incomplete: bool,
) -> (Vec<RegionQuarterRecord>, JoinCoverage) {
    let centroid_by_region: BTreeMap<&str, &RegionCentroid> = centroids
        .iter()
        .map(|c| (c.region_id.as_str(), c))
        .collect();
    let mut gdp_by_key: BTreeMap<RecordKey, &GdpObservation> = BTreeMap::new();
    for obs in gdp {
        gdp_by_key.insert(
            RecordKey::new(obs.region_id.clone(), obs.year, obs.period),
            obs,
        );
    }

    let mut coverage = JoinCoverage::default();
    let mut records = Vec::new();
    let mut missing_centroid = BTreeSet::new();
    let mut used_centroids = BTreeSet::new();

    for (key, mean) in radiance {
        if !mean.complete {
            coverage.incomplete_periods.push(IncompletePeriod {
                key: key.to_string(),
                months_observed: mean.months_observed,
            });
        }
        let Some(obs) = gdp_by_key.get(key) else {
            coverage.radiance_without_gdp.push(key.to_string());
            continue;
        };
        let Some(centroid) = centroid_by_region.get(key.region_id.as_str()) else {
            missing_centroid.insert(key.region_id.clone());
            coverage.dropped_for_missing_centroid.push(key.to_string());
            continue;
        };
        used_centroids.insert(key.region_id.as_str());
        if !mean.complete && !include_incomplete {
            coverage.incomplete_excluded += 1;
            continue;
        }
        records.push(RegionQuarterRecord {
            region_id: key.region_id.clone(),
            year: key.year,
            period: key.period,
            latitude: centroid.latitude,
            longitude: centroid.longitude,
            mean_nightlight: mean.mean_nightlight,
            gdp: obs.gdp,
        });
    }
    for key in gdp_by_key.keys() {
        if !radiance.contains_key(key) {
            coverage.gdp_without_radiance.push(key.to_string());
        }
    }
    coverage.regions_without_centroid = missing_centroid.into_iter().collect();
    coverage.unused_centroids = centroid_by_region
        .keys()
        .filter(|r| !used_centroids.contains(*r))
        .map(|r| r.to_string())
        .collect();
    coverage.joined = records.len();
    (records, coverage)
}

/// Sorts records into canonical `(region, year, period)` order.
pub fn sort_records(records: &mut [RegionQuarterRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_dataset_csv(records: &[RegionQuarterRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::Empty("no records to write".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(records, file).map_err(|e| Error::io(path, e))
}

/// Writes the dataset table. Reals use the shortest representation that
/// parses back to the identical `f64`.
pub fn write_dataset<W: Write>(records: &[RegionQuarterRecord], out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&RegionQuarterRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(DATASET_HEADER)?;
    for r in sorted {
        writer.write_record([
            r.region_id.clone(),
            r.year.to_string(),
            r.period.to_string(),
            r.latitude.to_string(),
            r.longitude.to_string(),
            r.mean_nightlight.to_string(),
            r.gdp.to_string(),
        ])?;
    }
    writer.flush()
}

pub fn parse_dataset_csv(path: impl AsRef<Path>) -> Result<Vec<RegionQuarterRecord>> {
    let path = path.as_ref();
    read_dataset(open(path)?, path)
}

pub fn read_dataset<R: Read>(input: R, path: &Path) -> Result<Vec<RegionQuarterRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    CsvRows::new(input, path, &DATASET_HEADER)?.for_each(|line, rec| {
        let record = RegionQuarterRecord {
            region_id: text_field(rec, 0, "region_id", path, line)?,
            year: field(rec, 1, "year", path, line)?,
            period: field(rec, 2, "period", path, line)?,
            latitude: field(rec, 3, "latitude", path, line)?,
            longitude: field(rec, 4, "longitude", path, line)?,
            mean_nightlight: field(rec, 5, "mean_nightlight", path, line)?,
            gdp: field(rec, 6, "gdp", path, line)?,
        };
        let ctx = row_context(path, line);
        record.validate(&ctx)?;
        if !seen.insert(record.key()) {
            return Err(Error::DuplicateKey {
                context: ctx,
                key: record.key().to_string(),
            });
        }
        out.push(record);
        Ok(())
    })?;
    Ok(out)
}
