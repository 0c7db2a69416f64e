//! Per-region ARIMA(p, d, q) baseline.
//!
//! Estimation minimizes the conditional sum of squares (CSS) with a
//! Nelder-Mead simplex. By default `d` comes from repeated KPSS tests and
//! `p, q ∈ {0, 1, 2}` from AICc; a pure AICc search over all three is also
//! available. Forecasts are recursive conditional expectations integrated
//! back to levels.
//!
//! ```
//! use regnl::arima::{fit, forecast, ArimaOrder};
//!
//! let series: Vec<f64> = (0..40).map(|t| 100.0 + 2.0 * t as f64).collect();
//! let order = ArimaOrder::new(0, 1, 0).unwrap();
//! let f = fit(&series, order).unwrap();
//! let ahead = forecast(&f, &series, 2).unwrap();
//! assert!((ahead[0] - 180.0).abs() < 1e-6);
//! ```

pub mod kpss;
mod series;
pub mod simplex;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Period;
pub use series::{series_by_region, GdpSeries};
use simplex::{minimize, SimplexOptions};

pub const MAX_ORDER: u8 = 2;

/// Slope of the linear penalty on stationarity/invertibility violations.
const PENALTY: f64 = 1e6;

/// Penalized search keeps every root at least this far inside the bound.
const BOUND_MARGIN: f64 = 1e-3;

/// Simplex restarts from the incumbent after the first search.
const RESTARTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: u8,
    pub d: u8,
    pub q: u8,
}

impl ArimaOrder {
    /// Each component must lie in `0..=2`, and a model without AR or MA
    /// terms needs `d ≥ 1` (otherwise it is a constant).
    pub fn new(p: u8, d: u8, q: u8) -> Result<Self> {
        if p > MAX_ORDER || d > MAX_ORDER || q > MAX_ORDER {
            return Err(Error::Config(format!(
                "ARIMA order ({p},{d},{q}) outside 0..={MAX_ORDER}"
            )));
        }
        if p + q == 0 && d == 0 {
            return Err(Error::Config(
                "ARIMA(0,0,0) is a constant, not a model".into(),
            ));
        }
        Ok(ArimaOrder { p, d, q })
    }

    /// Every valid order, sorted by `(p + q, d, p)`.
    pub fn grid() -> Vec<ArimaOrder> {
        let mut all: Vec<ArimaOrder> = (0..=MAX_ORDER)
            .flat_map(|p| {
                (0..=MAX_ORDER).flat_map(move |d| (0..=MAX_ORDER).map(move |q| (p, d, q)))
            })
            .filter_map(|(p, d, q)| ArimaOrder::new(p, d, q).ok())
            .collect();
        all.sort_by_key(|o| (o.p + o.q, o.d, o.p));
        all
    }

    /// AR, MA and intercept terms.
    pub fn coefficient_count(self) -> usize {
        (self.p + self.q) as usize + 1
    }

    /// Hard minimum series length: `n − d ≥ p + q + 2`.
    pub fn min_length(self) -> usize {
        (self.d + self.p + self.q) as usize + 2
    }

    /// Below this length a fit is still attempted but flagged.
    pub fn recommended_length(self) -> usize {
        self.d as usize + 10 * self.coefficient_count()
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// `w_t = c + Σ φ_i w_{t−i} + Σ θ_j ε_{t−j} + ε_t` on the differenced series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
}

impl Coefficients {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, intercept: f64) -> Self {
        Coefficients { ar, ma, intercept }
    }

    fn from_flat(order: ArimaOrder, x: &[f64]) -> Self {
        let (p, q) = (order.p as usize, order.q as usize);
        Coefficients {
            ar: x[..p].to_vec(),
            ma: x[p..p + q].to_vec(),
            intercept: x[p + q],
        }
    }

    /// Largest stability constraint value for `1 − a₁z − a₂z²`; the roots
    /// lie outside the unit circle iff this is below 1.
    fn root_margin(a: &[f64]) -> f64 {
        match *a {
            [] => f64::NEG_INFINITY,
            [a1] => a1.abs(),
            [a1, a2] => (a1 + a2).max(a2 - a1).max(a2.abs()),
            _ => f64::INFINITY,
        }
    }

    fn margins(&self) -> (f64, f64) {
        let neg_ma: Vec<f64> = self.ma.iter().map(|t| -t).collect();
        (Self::root_margin(&self.ar), Self::root_margin(&neg_ma))
    }

    pub fn is_stationary(&self) -> bool {
        self.margins().0 < 1.0
    }

    pub fn is_invertible(&self) -> bool {
        self.margins().1 < 1.0
    }

    fn violation(&self) -> f64 {
        let (ar, ma) = self.margins();
        let limit = 1.0 - BOUND_MARGIN;
        (ar - limit).max(0.0) + (ma - limit).max(0.0)
    }

    /// Mean of a stationary process with these coefficients.
    pub fn process_mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar.iter().sum::<f64>())
    }
}

/// `d`-fold first differences; the output has `len − d` values.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>> {
    if values.len() <= d {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            needed: d + 1,
        });
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Inverse of [`difference`]: turns values of the `d`-times differenced
/// series that follow `tail` (the last `d` original levels) back into levels.
pub fn integrate(diffs: &[f64], tail: &[f64], d: usize) -> Result<Vec<f64>> {
    if tail.len() != d {
        return Err(Error::validation(
            "integrate",
            format!("tail has {} values but d = {d}", tail.len()),
        ));
    }
    if d == 0 {
        return Ok(diffs.to_vec());
    }
    let inner_tail: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let lower = integrate(diffs, &inner_tail, d - 1)?;
    let mut level = tail[d - 1];
    Ok(lower
        .into_iter()
        .map(|x| {
            level += x;
            level
        })
        .collect())
}

/// One-step residuals over the whole differenced series. Entries before `p`
/// (no full AR history) are 0 and are excluded from the objective.
pub fn residuals(coeffs: &Coefficients, w: &[f64]) -> Vec<f64> {
    let p = coeffs.ar.len();
    let mut eps = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut fitted = coeffs.intercept;
        for (i, phi) in coeffs.ar.iter().enumerate() {
            fitted += phi * w[t - 1 - i];
        }
        for (j, theta) in coeffs.ma.iter().enumerate() {
            if t > j {
                fitted += theta * eps[t - 1 - j];
            }
        }
        eps[t] = w[t] - fitted;
    }
    eps
}

/// Conditional sum of squares `Σ_{t ≥ p} ε_t²`.
pub fn css_objective(coeffs: &Coefficients, w: &[f64]) -> f64 {
    css_from(coeffs, w, coeffs.ar.len())
}

/// Sum of squared residuals from index `start` on (never before `p`).
fn css_from(coeffs: &Coefficients, w: &[f64], start: usize) -> f64 {
    let start = start.max(coeffs.ar.len()).min(w.len());
    residuals(coeffs, w)[start..].iter().map(|e| e * e).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub coefficients: Coefficients,
    /// `css / n_effective`.
    pub sigma2: f64,
    pub css: f64,
    pub aicc: f64,
    /// Residuals entering the CSS: `n` minus the conditioning observations.
    pub n_effective: usize,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// AICc of the Gaussian CSS likelihood with `p + q + 2` free parameters
/// (coefficients, intercept and the innovation variance). Infinite when the
/// correction term is undefined.
fn aicc(order: ArimaOrder, css: f64, n: usize) -> f64 {
    let k = order.coefficient_count() as f64 + 1.0;
    let n = n as f64;
    if n - k - 1.0 <= 0.0 {
        return f64::INFINITY;
    }
    let sigma2 = (css / n).max(f64::MIN_POSITIVE);
    let log_lik = -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    -2.0 * log_lik + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0)
}

fn scale_of(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let sd = (w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sd > 0.0 && sd.is_finite() {
        sd
    } else if mean != 0.0 && mean.is_finite() {
        mean.abs()
    } else {
        1.0
    }
}

/// Fits `order` to a level series by penalized CSS, conditioning on the
/// first `d + p` observations.
///
/// The differenced series is divided by its standard deviation during the
/// search so the simplex tolerance and the penalty act on a unit scale. The
/// search starts from zero AR/MA coefficients and the mean of the
/// differenced series as intercept.
pub fn fit(series: &[f64], order: ArimaOrder) -> Result<ArimaFit> {
    fit_conditioned(series, order, (order.d + order.p) as usize)
}

/// [`fit`] with the CSS taken over level indices `condition..n` only, so
/// that fits of different orders are scored on the same observations.
/// `condition` is raised to at least `d + p`.
pub fn fit_conditioned(series: &[f64], order: ArimaOrder, condition: usize) -> Result<ArimaFit> {
    let condition = condition.max((order.d + order.p) as usize);
    if series.len() < order.min_length() || series.len() <= condition {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: order.min_length().max(condition + 1),
        });
    }
    if series.len() < order.min_length() {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: order.min_length(),
        });
    }
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(
            "ARIMA series",
            format!("non-finite value {v}"),
        ));
    }
    let w = difference(series, order.d as usize)?;
    let scale = scale_of(&w);
    let scaled: Vec<f64> = w.iter().map(|v| v / scale).collect();

    let start_at = condition - order.d as usize;
    let objective = |x: &[f64]| {
        let c = Coefficients::from_flat(order, x);
        css_from(&c, &scaled, start_at) + PENALTY * c.violation()
    };
    let mut start = vec![0.0; order.coefficient_count()];
    start[order.coefficient_count() - 1] = scaled.iter().sum::<f64>() / scaled.len() as f64;

    let options = SimplexOptions::default();
    let mut best = minimize(objective, &start, options);
    let mut iterations = best.iterations;
    for _ in 0..RESTARTS {
        let next = minimize(objective, &best.x, options);
        iterations += next.iterations;
        let improved = next.value < best.value - 1e-12 * best.value.abs();
        if next.value <= best.value {
            best = next;
        }
        if !improved {
            break;
        }
    }
    if !best.value.is_finite() {
        return Err(Error::FitFailure(format!(
            "ARIMA{order}: objective diverged"
        )));
    }

    let mut coefficients = Coefficients::from_flat(order, &best.x);
    coefficients.intercept *= scale;
    if !coefficients.is_stationary() || !coefficients.is_invertible() {
        return Err(Error::FitFailure(format!(
            "ARIMA{order}: estimate violates stationarity or invertibility"
        )));
    }
    let css = css_from(&coefficients, &w, start_at);
    let n_effective = series.len() - condition;
    let mut warnings = Vec::new();
    if series.len() < order.recommended_length() {
        warnings.push(format!(
            "{} observations for {} coefficients; estimates may be unreliable",
            series.len(),
            order.coefficient_count()
        ));
    }
    if !best.converged {
        warnings.push(format!(
            "simplex stopped after {iterations} iterations without converging"
        ));
    }
    Ok(ArimaFit {
        order,
        coefficients,
        sigma2: css / n_effective as f64,
        css,
        aicc: aicc(order, css, n_effective),
        n_effective,
        iterations,
        converged: best.converged,
        warnings,
    })
}

/// How [`select_order_with`] picks an order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSelection {
    /// `d` from repeated KPSS tests, then AICc over `p` and `q`.
    #[default]
    KpssAicc,
    /// AICc over every `(p, d, q)` of the grid.
    Aicc,
}

impl fmt::Display for OrderSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderSelection::KpssAicc => "KPSS differencing, then AICc over p and q",
            OrderSelection::Aicc => "AICc over p, d and q",
        })
    }
}

/// [`select_order_with`] using the default rule. If no order at the tested
/// `d` can be scored, the whole grid is searched instead.
pub fn select_order(series: &[f64]) -> Result<(ArimaOrder, ArimaFit)> {
    select_order_with(series, OrderSelection::default())
}

pub fn select_order_with(series: &[f64], rule: OrderSelection) -> Result<(ArimaOrder, ArimaFit)> {
    let grid = ArimaOrder::grid();
    match rule {
        OrderSelection::Aicc => select_order_from(series, &grid),
        OrderSelection::KpssAicc => {
            let d = kpss::choose_differencing(series, MAX_ORDER);
            let at_d: Vec<ArimaOrder> = grid.iter().copied().filter(|o| o.d == d).collect();
            select_order_from(series, &at_d).or_else(|_| select_order_from(series, &grid))
        }
    }
}

/// Fits every candidate the series is long enough for and returns the one
/// with the lowest AICc. All candidates condition on the same leading
/// observations (the largest `d + p` among them) so their likelihoods cover
/// the same sample. Ties go to smaller `p + q`, then smaller `d`.
pub fn select_order_from(
    series: &[f64],
    candidates: &[ArimaOrder],
) -> Result<(ArimaOrder, ArimaFit)> {
    let n = series.len();
    let mut admissible: Vec<ArimaOrder> = candidates
        .iter()
        .copied()
        .filter(|o| n >= o.min_length())
        .collect();
    if admissible.is_empty() {
        return Err(Error::SeriesTooShort {
            len: n,
            needed: candidates.iter().map(|o| o.min_length()).min().unwrap_or(0),
        });
    }
    // The shared conditioning length is the largest one that leaves some
    // order with a defined AICc; orders that need more history are dropped.
    let max_condition = admissible
        .iter()
        .map(|o| (o.d + o.p) as usize)
        .max()
        .unwrap_or(0);
    let scorable =
        |o: &ArimaOrder, c: usize| (o.d + o.p) as usize <= c && n > c + o.coefficient_count() + 2;
    let condition = (0..=max_condition)
        .rev()
        .find(|&c| admissible.iter().any(|o| scorable(o, c)))
        .ok_or_else(|| {
            Error::FitFailure(format!("no ARIMA order can be scored on {n} observations"))
        })?;
    admissible.retain(|o| scorable(o, condition));
    let mut best: Option<ArimaFit> = None;
    for order in admissible {
        let Ok(f) = fit_conditioned(series, order, condition) else {
            continue;
        };
        if !f.aicc.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let key = |x: &ArimaFit| (x.order.p + x.order.q, x.order.d);
                f.aicc < b.aicc || (f.aicc == b.aicc && key(&f) < key(b))
            }
        };
        if better {
            best = Some(f);
        }
    }
    best.map(|f| (f.order, f)).ok_or_else(|| {
        Error::FitFailure(format!(
            "no admissible ARIMA order for {} observations",
            series.len()
        ))
    })
}

/// `h` level forecasts following `series`. Future innovations are zero, so
/// each differenced value is the AR/MA recursion on known and forecast
/// values; the path is then integrated from the last `d` levels.
pub fn forecast(fit: &ArimaFit, series: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::validation("forecast", "horizon must be at least 1"));
    }
    let d = fit.order.d as usize;
    let w = difference(series, d)?;
    let c = &fit.coefficients;
    let mut w_ext = w.clone();
    let mut eps = residuals(c, &w);
    for _ in 0..h {
        let t = w_ext.len();
        let mut next = c.intercept;
        for (i, phi) in c.ar.iter().enumerate() {
            if t > i {
                next += phi * w_ext[t - 1 - i];
            }
        }
        for (j, theta) in c.ma.iter().enumerate() {
            if t > j {
                next += theta * eps[t - 1 - j];
            }
        }
        w_ext.push(next);
        eps.push(0.0);
    }
    integrate(&w_ext[w.len()..], &series[series.len() - d..], d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub year: i32,
    pub period: Period,
    pub gdp: f64,
}

/// Serialized per-region outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub region: String,
    pub order: ArimaOrder,
    pub coefficients: Coefficients,
    pub sigma2: f64,
    pub aicc: f64,
    pub forecasts: Vec<ForecastPoint>,
}

/// Order selection and an `h`-step forecast for one region.
pub fn fit_and_forecast(series: &GdpSeries, h: usize) -> Result<FitSummary> {
    let (order, f) = select_order(series.values()).map_err(|e| match e {
        Error::FitFailure(m) => Error::FitFailure(format!("region {}: {m}", series.region_id())),
        other => other,
    })?;
    let values = forecast(&f, series.values(), h)?;
    Ok(FitSummary {
        region: series.region_id().to_string(),
        order,
        coefficients: f.coefficients,
        sigma2: f.sigma2,
        aicc: f.aicc,
        forecasts: series
            .future_keys(h)
            .into_iter()
            .zip(values)
            .map(|((year, period), gdp)| ForecastPoint { year, period, gdp })
            .collect(),
    })
}

/// [`fit_and_forecast`] for every region, in parallel. Output follows the
/// map's region order.
pub fn forecast_regions(series: &BTreeMap<String, GdpSeries>, h: usize) -> Result<Vec<FitSummary>> {
    let all: Vec<&GdpSeries> = series.values().collect();
    all.par_iter().map(|s| fit_and_forecast(s, h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn order(p: u8, d: u8, q: u8) -> ArimaOrder {
        ArimaOrder::new(p, d, q).unwrap()
    }

    #[test]
    fn difference_examples() {
        assert_eq!(difference(&[1.0, 2.0, 4.0], 1).unwrap(), vec![1.0, 2.0]);
        assert_eq!(
            difference(&[1.0, 2.0, 4.0], 0).unwrap(),
            vec![1.0, 2.0, 4.0]
        );
        assert_eq!(
            difference(&[1.0, 2.0, 4.0, 8.0], 2).unwrap(),
            vec![1.0, 2.0]
        );
        assert!(matches!(
            difference(&[1.0, 2.0], 2),
            Err(Error::SeriesTooShort { len: 2, needed: 3 })
        ));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(
            integrate(&[1.0, 1.0], &[10.0], 1).unwrap(),
            vec![11.0, 12.0]
        );
        assert_eq!(integrate(&[3.0], &[], 0).unwrap(), vec![3.0]);
        assert!(integrate(&[1.0], &[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn order_rules() {
        assert!(ArimaOrder::new(0, 0, 0).is_err());
        assert!(ArimaOrder::new(3, 0, 0).is_err());
        assert_eq!(ArimaOrder::grid().len(), 26);
        assert_eq!(ArimaOrder::grid()[0], order(0, 1, 0));
        assert_eq!(order(2, 1, 1).to_string(), "(2,1,1)");
    }

    #[test]
    fn css_of_white_noise_is_sum_of_squares() {
        let w = noise(50, 1);
        let zero = Coefficients::new(vec![], vec![], 0.0);
        let expected: f64 = w.iter().map(|v| v * v).sum();
        assert!((css_objective(&zero, &w) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn css_vanishes_on_exact_ar1() {
        let mut w = vec![8.0];
        for _ in 0..30 {
            w.push(0.5 * w.last().unwrap());
        }
        assert_eq!(
            css_objective(&Coefficients::new(vec![0.5], vec![], 0.0), &w),
            0.0
        );
    }

    /// Residual recursion written from the model equation with explicit
    /// zero pre-sample values, independent of [`residuals`].
    fn brute_css(ar: &[f64], ma: &[f64], c: f64, w: &[f64]) -> f64 {
        let p = ar.len();
        let mut eps: Vec<Option<f64>> = vec![None; w.len()];
        let mut total = 0.0;
        for t in 0..w.len() {
            if t < p {
                continue;
            }
            let mut e = w[t] - c;
            for i in 1..=p {
                e -= ar[i - 1] * w[t - i];
            }
            for j in 1..=ma.len() {
                let past = t.checked_sub(j).and_then(|s| eps[s]).unwrap_or(0.0);
                e -= ma[j - 1] * past;
            }
            eps[t] = Some(e);
            total += e * e;
        }
        total
    }

    proptest! {
        #[test]
        fn css_matches_brute_force(
            ar in proptest::collection::vec(-0.9f64..0.9, 0..=2),
            ma in proptest::collection::vec(-0.9f64..0.9, 0..=2),
            c in -2.0f64..2.0,
            w in proptest::collection::vec(-10.0f64..10.0, 3..40),
        ) {
            let got = css_objective(&Coefficients::new(ar.clone(), ma.clone(), c), &w);
            let want = brute_css(&ar, &ma, c, &w);
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }

        #[test]
        fn integrate_inverts_difference(
            x in proptest::collection::vec(-1e3f64..1e3, 3..60),
            d in 0usize..=2,
        ) {
            let back = integrate(&difference(&x, d).unwrap(), &x[..d], d).unwrap();
            for (a, b) in back.iter().zip(&x[d..]) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    fn simulate_arma(phi: f64, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let e = noise(n + 100, seed);
        let mut w = vec![0.0; n + 100];
        for t in 1..n + 100 {
            w[t] = phi * w[t - 1] + e[t] + theta * e[t - 1];
        }
        w.split_off(100)
    }

    #[test]
    fn recovers_ar1() {
        let mean: f64 = (0..20)
            .map(|s| {
                fit(&simulate_arma(0.7, 0.0, 200, s), order(1, 0, 0))
                    .unwrap()
                    .coefficients
                    .ar[0]
            })
            .sum::<f64>()
            / 20.0;
        assert!((0.6..=0.8).contains(&mean), "{mean}");
    }

    #[test]
    fn recovers_ma1() {
        let mean: f64 = (0..10)
            .map(|s| {
                fit(&simulate_arma(0.0, 0.5, 400, 100 + s), order(0, 0, 1))
                    .unwrap()
                    .coefficients
                    .ma[0]
            })
            .sum::<f64>()
            / 10.0;
        assert!((0.35..=0.65).contains(&mean), "{mean}");
    }

    #[test]
    fn constant_series_random_walk() {
        let s = vec![42.0; 12];
        let f = fit(&s, order(0, 1, 0)).unwrap();
        assert_eq!(f.css, 0.0);
        assert_eq!(forecast(&f, &s, 3).unwrap(), vec![42.0; 3]);
    }

    #[test]
    fn too_short_for_order() {
        assert!(matches!(
            fit(&[1.0, 2.0, 3.0], order(1, 1, 1)),
            Err(Error::SeriesTooShort { needed: 5, .. })
        ));
    }

    #[test]
    fn short_fit_is_flagged() {
        let s: Vec<f64> = noise(15, 3)
            .iter()
            .scan(0.0, |a, e| {
                *a += e;
                Some(*a)
            })
            .collect();
        let f = fit(&s, order(1, 1, 0)).unwrap();
        assert!(!f.warnings.is_empty());
    }

    fn manual_fit(o: ArimaOrder, ar: Vec<f64>, ma: Vec<f64>, c: f64) -> ArimaFit {
        ArimaFit {
            order: o,
            coefficients: Coefficients::new(ar, ma, c),
            sigma2: 1.0,
            css: 0.0,
            aicc: 0.0,
            n_effective: 0,
            iterations: 0,
            converged: true,
            warnings: vec![],
        }
    }

    #[test]
    fn random_walk_forecast_is_flat() {
        let f = manual_fit(order(0, 1, 0), vec![], vec![], 0.0);
        let s = [90.0, 97.0, 100.0];
        assert_eq!(forecast(&f, &s, 4).unwrap(), vec![100.0; 4]);
    }

    #[test]
    fn ar1_forecast_decays() {
        let f = manual_fit(order(1, 0, 0), vec![0.5], vec![], 0.0);
        assert_eq!(forecast(&f, &[3.0, 8.0], 2).unwrap(), vec![4.0, 2.0]);
        assert!(forecast(&f, &[3.0], 0).is_err());
    }

    #[test]
    fn one_step_forecast_matches_recursion() {
        let s: Vec<f64> = simulate_arma(0.4, 0.3, 80, 9)
            .iter()
            .scan(50.0, |a, e| {
                *a += e;
                Some(*a)
            })
            .collect();
        let f = fit(&s, order(2, 1, 1)).unwrap();
        let c = &f.coefficients;
        // Level-space recursion: reconstruct ε from the level equation.
        let w: Vec<f64> = s.windows(2).map(|p| p[1] - p[0]).collect();
        let mut e = vec![0.0; w.len()];
        for t in 2..w.len() {
            e[t] =
                w[t] - c.intercept - c.ar[0] * w[t - 1] - c.ar[1] * w[t - 2] - c.ma[0] * e[t - 1];
        }
        let n = w.len();
        let next_w = c.intercept + c.ar[0] * w[n - 1] + c.ar[1] * w[n - 2] + c.ma[0] * e[n - 1];
        let want = s[s.len() - 1] + next_w;
        let got = forecast(&f, &s, 1).unwrap()[0];
        assert!((got - want).abs() <= 1e-9 * want.abs());
    }

    #[test]
    fn stationary_forecast_tends_to_mean() {
        let s: Vec<f64> = simulate_arma(0.6, 0.0, 200, 4)
            .iter()
            .map(|v| v + 5.0)
            .collect();
        let f = fit(&s, order(1, 0, 0)).unwrap();
        let far = forecast(&f, &s, 400).unwrap();
        let mean = f.coefficients.process_mean();
        assert!((far[399] - mean).abs() < 1e-9 * mean.abs().max(1.0));
    }

    #[test]
    fn selection_prefers_d1_for_random_walks() {
        let hits = (0..20)
            .filter(|&s| {
                let walk: Vec<f64> = noise(200, 500 + s)
                    .iter()
                    .scan(0.0, |a, e| {
                        *a += e;
                        Some(*a)
                    })
                    .collect();
                select_order(&walk).unwrap().0.d == 1
            })
            .count();
        assert!(hits >= 16, "{hits}/20");
    }

    #[test]
    fn white_noise_is_not_differenced() {
        for s in 0..5 {
            let (o, f) = select_order(&noise(120, 900 + s)).unwrap();
            assert_eq!(o.d, 0);
            assert_eq!(o, f.order);
            assert!(f.coefficients.is_stationary() && f.coefficients.is_invertible());
        }
    }

    #[test]
    fn exact_ties_prefer_fewer_terms_then_less_differencing() {
        // Every d ≥ 1 order fits a straight line with zero CSS. (0,1,0) and
        // (0,2,0) have equal AICc on the common sample; smaller d wins.
        let line: Vec<f64> = (0..30).map(|t| 5.0 + 3.0 * t as f64).collect();
        let (o, f) = select_order_with(&line, OrderSelection::Aicc).unwrap();
        assert_eq!(o, order(0, 1, 0));
        assert_eq!(f.css, 0.0);
        let pair = [order(0, 2, 0), order(0, 1, 0)];
        assert_eq!(select_order_from(&line, &pair).unwrap().0, order(0, 1, 0));
    }

    #[test]
    fn pure_aicc_rule_is_available() {
        let walk: Vec<f64> = noise(100, 5)
            .iter()
            .scan(0.0, |a, e| {
                *a += e;
                Some(*a)
            })
            .collect();
        let (_, f) = select_order_with(&walk, OrderSelection::Aicc).unwrap();
        assert!(f.coefficients.is_stationary() && f.coefficients.is_invertible());
    }

    #[test]
    fn length_five_uses_reduced_grid() {
        let (o, _) = select_order(&[1.0, 2.5, 2.0, 3.5, 4.0]).unwrap();
        assert!(o.min_length() <= 5);
        assert!(matches!(
            select_order(&[1.0, 2.0]),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn fitting_is_deterministic() {
        let s = simulate_arma(0.5, 0.2, 60, 12);
        assert_eq!(
            fit(&s, order(1, 0, 1)).unwrap(),
            fit(&s, order(1, 0, 1)).unwrap()
        );
    }

    #[test]
    fn summary_json_fields() {
        let g = GdpSeries::new(
            "TX",
            (0..20)
                .map(|i| {
                    (
                        2014 + i / 4,
                        Period::Quarter((i % 4) as u8 + 1),
                        100.0 + i as f64,
                    )
                })
                .collect(),
        )
        .unwrap();
        let s = fit_and_forecast(&g, 8).unwrap();
        assert_eq!(s.forecasts.len(), 8);
        assert_eq!(
            (s.forecasts[0].year, s.forecasts[0].period),
            (2019, Period::Quarter(1))
        );
        let v = serde_json::to_value(&s).unwrap();
        for key in [
            "region",
            "order",
            "coefficients",
            "sigma2",
            "aicc",
            "forecasts",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
