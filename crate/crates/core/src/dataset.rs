//! Supervised matrices built from joined records.
//!
//! Inputs are min-max scaled to `[0, 1]` and the GDP target is z-scored, with
//! every statistic taken from the training split only. Test rows can therefore
//! land outside `[0, 1]`; they are never clipped.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Frequency, RecordKey, RegionQuarterRecord};
use crate::matrix::Matrix;

pub const FEATURE_NAMES: [&str; 3] = ["mean_nightlight", "latitude", "longitude"];

/// Which inputs the model sees. Mean nightlight is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct FeatureSpec {
    pub use_coordinates: bool,
}

impl FeatureSpec {
    pub const NIGHTLIGHT_ONLY: FeatureSpec = FeatureSpec {
        use_coordinates: false,
    };
    pub const FULL: FeatureSpec = FeatureSpec {
        use_coordinates: true,
    };

    pub fn dim(self) -> usize {
        if self.use_coordinates {
            3
        } else {
            1
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        &FEATURE_NAMES[..self.dim()]
    }

    fn extract(self, r: &RegionQuarterRecord) -> impl Iterator<Item = f64> {
        [r.mean_nightlight, r.latitude, r.longitude]
            .into_iter()
            .take(self.dim())
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec::FULL
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.use_coordinates {
            "full"
        } else {
            "nightlight"
        })
    }
}

impl FromStr for FeatureSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" => Ok(FeatureSpec::FULL),
            "nightlight" => Ok(FeatureSpec::NIGHTLIGHT_ONLY),
            other => Err(format!(
                "unknown feature set {other:?} (expected nightlight or full)"
            )),
        }
    }
}

impl From<FeatureSpec> for String {
    fn from(f: FeatureSpec) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for FeatureSpec {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset {
    pub label: String,
    pub keys: Vec<RecordKey>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub spec: FeatureSpec,
    pub frequency: Option<Frequency>,
}

impl SupervisedDataset {
    /// Builds an unscaled dataset from records, keeping their order.
    pub fn from_records(
        label: impl Into<String>,
        records: &[&RegionQuarterRecord],
        spec: FeatureSpec,
    ) -> Result<Self> {
        let frequency = common_frequency(records.iter().copied())?;
        let dim = spec.dim();
        let mut data = Vec::with_capacity(records.len() * dim);
        let mut y = Vec::with_capacity(records.len());
        let mut keys = Vec::with_capacity(records.len());
        for r in records {
            data.extend(spec.extract(r));
            y.push(r.gdp);
            keys.push(r.key());
        }
        let x = Matrix::from_vec(records.len(), dim, data)?;
        Ok(SupervisedDataset {
            label: label.into(),
            keys,
            x,
            y,
            spec,
            frequency,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn select(&self, idx: &[usize], label: impl Into<String>) -> SupervisedDataset {
        SupervisedDataset {
            label: label.into(),
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            spec: self.spec,
            frequency: self.frequency,
        }
    }
}

fn common_frequency<'a>(
    records: impl Iterator<Item = &'a RegionQuarterRecord>,
) -> Result<Option<Frequency>> {
    let mut freq = None;
    for r in records {
        let f = r.period.frequency();
        match freq {
            None => freq = Some(f),
            Some(g) if g != f => {
                return Err(Error::Schema(
                    "dataset mixes quarterly and annual records".into(),
                ))
            }
            _ => {}
        }
    }
    Ok(freq)
}

fn year_label(prefix: &str, years: &BTreeSet<i32>) -> String {
    match (years.first(), years.last()) {
        (Some(a), Some(b)) if a == b => format!("{prefix}:{a}"),
        (Some(a), Some(b)) => format!("{prefix}:{a}-{b}"),
        _ => format!("{prefix}:none"),
    }
}

/// Partitions records by year. Records in neither set are dropped.
pub fn split_by_years(
    records: &[RegionQuarterRecord],
    train_years: &BTreeSet<i32>,
    test_years: &BTreeSet<i32>,
    spec: FeatureSpec,
) -> Result<(SupervisedDataset, SupervisedDataset)> {
    if let Some(y) = train_years.intersection(test_years).next() {
        return Err(Error::Config(format!(
            "year {y} is in both the train and test sets"
        )));
    }
    let train: Vec<_> = records
        .iter()
        .filter(|r| train_years.contains(&r.year))
        .collect();
    let test: Vec<_> = records
        .iter()
        .filter(|r| test_years.contains(&r.year))
        .collect();
    if train.is_empty() {
        return Err(Error::Empty("training split has no rows".into()));
    }
    Ok((
        SupervisedDataset::from_records(year_label("train", train_years), &train, spec)?,
        SupervisedDataset::from_records(year_label("test", test_years), &test, spec)?,
    ))
}

/// Splits off a seeded random `fraction` of rows as a holdout set.
pub fn holdout_split(
    data: &SupervisedDataset,
    fraction: f64,
    seed: u64,
) -> Result<(SupervisedDataset, SupervisedDataset)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "holdout fraction {fraction} outside [0, 1)"
        )));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_holdout = (data.len() as f64 * fraction).round() as usize;
    let (hold, keep) = idx.split_at(n_holdout);
    let mut keep = keep.to_vec();
    let mut hold = hold.to_vec();
    keep.sort_unstable();
    hold.sort_unstable();
    Ok((
        data.select(&keep, data.label.clone()),
        data.select(&hold, format!("{}:holdout", data.label)),
    ))
}

/// Min-max parameters per input and z-score parameters for the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_mean: f64,
    /// Population (divide-by-n) standard deviation.
    pub target_std: f64,
    pub fitted_on: String,
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.feature_min.len()
    }

    pub fn scale_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (&v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            *o = (v - self.feature_min[j]) / (self.feature_max[j] - self.feature_min[j]);
        }
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }
}

pub fn fit_scaler(train: &SupervisedDataset) -> Result<ScalerParams> {
    if train.is_empty() {
        return Err(Error::Empty("cannot fit a scaler on zero rows".into()));
    }
    let names = train.spec.names();
    let mut feature_min = Vec::with_capacity(names.len());
    let mut feature_max = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let col = train.x.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return Err(Error::ConstantFeature {
                feature: name.to_string(),
            });
        }
        feature_min.push(lo);
        feature_max.push(hi);
    }
    if train.len() < 2 {
        return Err(Error::ConstantFeature {
            feature: "gdp".into(),
        });
    }
    let n = train.len() as f64;
    let mean = train.y.iter().sum::<f64>() / n;
    let var = train.y.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std <= 0.0 {
        return Err(Error::ConstantFeature {
            feature: "gdp".into(),
        });
    }
    Ok(ScalerParams {
        feature_names: names.iter().map(|s| s.to_string()).collect(),
        feature_min,
        feature_max,
        target_mean: mean,
        target_std: std,
        fitted_on: train.label.clone(),
    })
}

pub fn transform(data: &SupervisedDataset, scaler: &ScalerParams) -> Result<SupervisedDataset> {
    if data.x.cols() != scaler.dim() {
        return Err(Error::Dimension {
            expected: scaler.dim(),
            found: data.x.cols(),
        });
    }
    let mut x = data.x.clone();
    for i in 0..x.rows() {
        let raw = data.x.row(i);
        scaler.scale_row(raw, x.row_mut(i));
    }
    Ok(SupervisedDataset {
        x,
        y: data.y.iter().map(|&y| scaler.scale_target(y)).collect(),
        ..data.clone()
    })
}

pub fn inverse_transform_target(scaled: &[f64], scaler: &ScalerParams) -> Vec<f64> {
    scaled.iter().map(|&v| scaler.unscale_target(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Period;
    use proptest::prelude::*;

    fn rec(
        region: &str,
        year: i32,
        q: u8,
        nl: f64,
        lat: f64,
        lon: f64,
        gdp: f64,
    ) -> RegionQuarterRecord {
        RegionQuarterRecord {
            region_id: region.into(),
            year,
            period: Period::Quarter(q),
            latitude: lat,
            longitude: lon,
            mean_nightlight: nl,
            gdp,
        }
    }

    fn panel(regions: usize, years: std::ops::Range<i32>) -> Vec<RegionQuarterRecord> {
        let mut out = Vec::new();
        for r in 0..regions {
            for y in years.clone() {
                for q in 1..=4 {
                    out.push(rec(
                        &format!("R{r:02}"),
                        y,
                        q,
                        1.0 + r as f64 + 0.01 * (y - 2014) as f64,
                        30.0 + r as f64 * 0.3,
                        -120.0 + r as f64,
                        1000.0 * (1 + r) as f64 + q as f64,
                    ));
                }
            }
        }
        out
    }

    fn years(r: std::ops::RangeInclusive<i32>) -> BTreeSet<i32> {
        r.collect()
    }

    #[test]
    fn split_counts_match_fifty_region_layout() {
        let records = panel(50, 2014..2021);
        let (train, test) = split_by_years(
            &records,
            &years(2014..=2018),
            &years(2019..=2020),
            FeatureSpec::FULL,
        )
        .unwrap();
        assert_eq!(train.len(), 1000);
        assert_eq!(test.len(), 400);
        assert_eq!(train.x.cols(), 3);
        assert_eq!(train.label, "train:2014-2018");
    }

    #[test]
    fn empty_test_years() {
        let records = panel(3, 2014..2016);
        let (train, test) = split_by_years(
            &records,
            &years(2014..=2015),
            &BTreeSet::new(),
            FeatureSpec::FULL,
        )
        .unwrap();
        assert_eq!(train.len(), records.len());
        assert!(test.is_empty());
    }

    #[test]
    fn overlapping_years_rejected() {
        let records = panel(2, 2014..2016);
        assert!(matches!(
            split_by_years(
                &records,
                &years(2014..=2015),
                &years(2015..=2016),
                FeatureSpec::FULL
            ),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            split_by_years(
                &records,
                &years(2030..=2031),
                &BTreeSet::new(),
                FeatureSpec::FULL
            ),
            Err(Error::Empty(_))
        ));
    }

    fn tiny(nl: &[f64], lat: &[f64], gdp: &[f64]) -> SupervisedDataset {
        let records: Vec<_> = nl
            .iter()
            .zip(lat)
            .zip(gdp)
            .enumerate()
            .map(|(i, ((&n, &l), &g))| rec("A", 2014 + i as i32, 1, n, l, -100.0 - i as f64, g))
            .collect();
        let refs: Vec<_> = records.iter().collect();
        SupervisedDataset::from_records("train", &refs, FeatureSpec::FULL).unwrap()
    }

    #[test]
    fn scaler_statistics() {
        let s = fit_scaler(&tiny(&[1.0, 3.0], &[10.0, 20.0], &[100.0, 300.0])).unwrap();
        assert_eq!(s.feature_min[0], 1.0);
        assert_eq!(s.feature_max[0], 3.0);
        assert_eq!(s.target_mean, 200.0);
        assert_eq!(s.target_std, 100.0);
        assert_eq!(s.fitted_on, "train");
    }

    #[test]
    fn constant_feature_is_named() {
        match fit_scaler(&tiny(&[1.0, 3.0], &[10.0, 10.0], &[100.0, 300.0])) {
            Err(Error::ConstantFeature { feature }) => assert_eq!(feature, "latitude"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transform_endpoints_and_extrapolation() {
        let train = tiny(&[1.0, 3.0], &[10.0, 20.0], &[100.0, 300.0]);
        let s = fit_scaler(&train).unwrap();
        let t = transform(&train, &s).unwrap();
        assert_eq!(t.x.get(0, 0), 0.0);
        assert_eq!(t.x.get(1, 0), 1.0);
        assert_eq!(t.y, vec![-1.0, 1.0]);

        let test = tiny(&[5.0, 2.0], &[15.0, 15.0], &[200.0, 400.0]);
        let t = transform(&test, &s).unwrap();
        assert_eq!(t.x.get(0, 0), 2.0);
        assert_eq!(t.y[0], 0.0);
    }

    #[test]
    fn transform_dimension_mismatch() {
        let train = tiny(&[1.0, 3.0], &[10.0, 20.0], &[100.0, 300.0]);
        let mut s = fit_scaler(&train).unwrap();
        s.feature_min.pop();
        s.feature_max.pop();
        assert!(matches!(
            transform(&train, &s),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn inverse_target() {
        let s = ScalerParams {
            feature_names: vec![],
            feature_min: vec![],
            feature_max: vec![],
            target_mean: 200.0,
            target_std: 100.0,
            fitted_on: "t".into(),
        };
        assert_eq!(
            inverse_transform_target(&[0.0, 1.5], &s),
            vec![200.0, 350.0]
        );
    }

    #[test]
    fn ablation_column_matches_full_spec() {
        let records = panel(6, 2014..2017);
        let ys = years(2014..=2016);
        let none = BTreeSet::new();
        let (full, _) = split_by_years(&records, &ys, &none, FeatureSpec::FULL).unwrap();
        let (nl, _) = split_by_years(&records, &ys, &none, FeatureSpec::NIGHTLIGHT_ONLY).unwrap();
        let full_t = transform(&full, &fit_scaler(&full).unwrap()).unwrap();
        let nl_t = transform(&nl, &fit_scaler(&nl).unwrap()).unwrap();
        assert_eq!(nl_t.x.cols(), 1);
        assert_eq!(nl_t.x.column(0), full_t.x.column(0));
        assert_eq!(nl_t.y, full_t.y);
    }

    #[test]
    fn holdout_is_deterministic_partition() {
        let records = panel(5, 2014..2016);
        let (train, _) = split_by_years(
            &records,
            &years(2014..=2015),
            &BTreeSet::new(),
            FeatureSpec::FULL,
        )
        .unwrap();
        let (a, h) = holdout_split(&train, 0.25, 3).unwrap();
        let (a2, h2) = holdout_split(&train, 0.25, 3).unwrap();
        assert_eq!((a.len(), h.len()), (30, 10));
        assert_eq!(a, a2);
        assert_eq!(h, h2);
    }

    proptest! {
        #[test]
        fn scaler_ignores_test_rows(test_rows in 0usize..40, seed in any::<u64>()) {
            let records = panel(8, 2014..2019);
            let train_years = years(2014..=2016);
            let (train, _) = split_by_years(&records, &train_years, &BTreeSet::new(), FeatureSpec::FULL).unwrap();
            let mut with_test = records.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            with_test.shuffle(&mut rng);
            let kept: Vec<_> = with_test
                .into_iter()
                .filter(|r| r.year <= 2016)
                .chain(records.iter().filter(|r| r.year > 2016).take(test_rows).cloned())
                .collect();
            let mut kept = kept;
            crate::ingest::sort_records(&mut kept);
            let (train2, _) = split_by_years(&kept, &train_years, &years(2017..=2018), FeatureSpec::FULL).unwrap();
            prop_assert_eq!(fit_scaler(&train).unwrap(), fit_scaler(&train2).unwrap());
        }

        #[test]
        fn transform_preserves_column_order(values in proptest::collection::vec(-1e3f64..1e3, 3..30)) {
            let lat: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let gdp: Vec<f64> = (0..values.len()).map(|i| 1.0 + i as f64).collect();
            let ds = tiny(&values, &lat, &gdp);
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let t = transform(&ds, &fit_scaler(&ds).unwrap()).unwrap();
            let col = t.x.column(0);
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(col[i] < col[j]);
                    }
                }
            }
        }

        #[test]
        fn target_round_trip(ys in proptest::collection::vec(-1e7f64..1e7, 2..50), mean in -1e6f64..1e6, std in 1e-3f64..1e6) {
            let s = ScalerParams {
                feature_names: vec![],
                feature_min: vec![],
                feature_max: vec![],
                target_mean: mean,
                target_std: std,
                fitted_on: "t".into(),
            };
            let scaled: Vec<f64> = ys.iter().map(|&y| s.scale_target(y)).collect();
            let back = inverse_transform_target(&scaled, &s);
            for (a, b) in ys.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(mean.abs()).max(1.0));
            }
        }
    }
}
