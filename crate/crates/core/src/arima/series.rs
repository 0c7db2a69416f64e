use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::{Period, RegionQuarterRecord};

/// One region's GDP over contiguous periods, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GdpSeries {
    region_id: String,
    keys: Vec<(i32, Period)>,
    values: Vec<f64>,
}

impl GdpSeries {
    /// Builds a series from `(year, period, value)` triples in any order.
    /// Periods must share one frequency and leave no gaps.
    pub fn new(region_id: impl Into<String>, mut points: Vec<(i32, Period, f64)>) -> Result<Self> {
        let region_id = region_id.into();
        let context = format!("series {region_id}");
        if points.is_empty() {
            return Err(Error::Empty(format!("{context} has no observations")));
        }
        points.sort_by_key(|a| (a.0, a.1));
        for pair in points.windows(2) {
            let (year, period, _) = pair[0];
            let next = (pair[1].0, pair[1].1);
            if period.frequency() != next.1.frequency() {
                return Err(Error::validation(
                    &context,
                    "mixed quarterly and annual periods",
                ));
            }
            if period.following(year) != next {
                return Err(Error::validation(
                    &context,
                    format!(
                        "gap or duplicate after {year} {period}: next is {} {}",
                        next.0, next.1
                    ),
                ));
            }
        }
        if let Some(&(year, period, v)) = points.iter().find(|p| !p.2.is_finite()) {
            return Err(Error::validation(
                &context,
                format!("non-finite value {v} at {year} {period}"),
            ));
        }
        Ok(GdpSeries {
            region_id,
            keys: points.iter().map(|&(y, p, _)| (y, p)).collect(),
            values: points.iter().map(|p| p.2).collect(),
        })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn keys(&self) -> &[(i32, Period)] {
        &self.keys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `h` periods following the last observation.
    pub fn future_keys(&self, h: usize) -> Vec<(i32, Period)> {
        let mut key = *self.keys.last().expect("series is never empty");
        (0..h)
            .map(|_| {
                key = key.1.following(key.0);
                key
            })
            .collect()
    }
}

/// Groups dataset rows by region, keeping rows whose year passes `keep`.
pub fn series_by_region(
    records: &[RegionQuarterRecord],
    keep: impl Fn(i32) -> bool,
) -> Result<BTreeMap<String, GdpSeries>> {
    let mut grouped: BTreeMap<&str, Vec<(i32, Period, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| keep(r.year)) {
        grouped
            .entry(&r.region_id)
            .or_default()
            .push((r.year, r.period, r.gdp));
    }
    grouped
        .into_iter()
        .map(|(region, points)| Ok((region.to_string(), GdpSeries::new(region, points)?)))
        .collect()
}
