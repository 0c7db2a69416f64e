//! Order selection and forecasts on a trending quarterly series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use regnl::arima::{fit, forecast, select_order, ArimaOrder};

fn main() -> regnl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.5).expect("valid sd");
    let mut level = 100.0;
    let series: Vec<f64> = (0..24)
        .map(|_| {
            level += 0.8 + noise.sample(&mut rng);
            level
        })
        .collect();

    let (order, best) = select_order(&series)?;
    println!(
        "selected {order}: AICc {:.2}, sigma^2 {:.3}",
        best.aicc, best.sigma2
    );
    println!("coefficients {:?}", best.coefficients);

    let ahead = forecast(&best, &series, 8)?;
    println!("last observation {:.2}", series[series.len() - 1]);
    for (h, v) in ahead.iter().enumerate() {
        println!("  h = {}: {v:.2}", h + 1);
    }

    for (p, d, q) in [(1, 1, 0), (0, 1, 1), (2, 1, 2)] {
        let f = fit(&series, ArimaOrder::new(p, d, q)?)?;
        println!("{} AICc {:.2} converged {}", f.order, f.aicc, f.converged);
    }
    Ok(())
}
