//! KPSS level-stationarity test, used to choose the differencing order.

/// 5% critical value of the level-stationarity KPSS statistic.
pub const KPSS_CRITICAL_5PCT: f64 = 0.463;

/// Bartlett window width `⌊3√n / 13⌋`.
pub fn bartlett_lags(n: usize) -> usize {
    (3.0 * (n as f64).sqrt() / 13.0).floor() as usize
}

/// KPSS statistic `Σ S_t² / (n² σ̂²)` for demeaned `y`, where `S_t` are the
/// partial sums and `σ̂²` the Bartlett-weighted long-run variance. A series
/// with zero variance scores 0.
pub fn kpss_statistic(y: &[f64], lags: usize) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let e: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut long_run = e.iter().map(|v| v * v).sum::<f64>() / nf;
    for s in 1..=lags.min(n - 1) {
        let weight = 1.0 - s as f64 / (lags as f64 + 1.0);
        let cov: f64 = e[s..]
            .iter()
            .zip(&e[..n - s])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / nf;
        long_run += 2.0 * weight * cov;
    }
    if long_run <= 0.0 || !long_run.is_finite() {
        return 0.0;
    }
    let mut partial = 0.0;
    let mut sum_sq = 0.0;
    for v in &e {
        partial += v;
        sum_sq += partial * partial;
    }
    sum_sq / (nf * nf * long_run)
}

/// Smallest `d ≤ max_d` whose `d`-th difference passes the KPSS test at 5%.
/// Series too short to test (fewer than 4 values after differencing) stop
/// at the current `d`.
pub fn choose_differencing(series: &[f64], max_d: u8) -> u8 {
    let mut y = series.to_vec();
    for d in 0..max_d {
        if y.len() < 4 || kpss_statistic(&y, bartlett_lags(y.len())) < KPSS_CRITICAL_5PCT {
            return d;
        }
        y = y.windows(2).map(|w| w[1] - w[0]).collect();
    }
    max_d
}
