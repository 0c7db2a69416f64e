//! Least-squares baseline on nightlight alone and with coordinates.

use regnl::baselines::{linreg_predict, ols_fit, DEFAULT_RIDGE_EPSILON};
use regnl::dataset::{split_by_years, FeatureSpec};
use regnl::ingest::{aggregate_to_period, join_records, rebase_gdp, DeflatorTable, Frequency};
use regnl::metrics::{weighted_error, EvaluationInput, RegionPrediction};
use regnl::runner::{generate, SimulationSpec};

fn main() -> regnl::Result<()> {
    let spec = SimulationSpec {
        disruption: None,
        ..SimulationSpec::default()
    };
    let data = generate(&spec)?;
    let deflators = DeflatorTable::new(data.deflators.clone(), 2011)?;
    let gdp = rebase_gdp(&data.gdp, &deflators)?;
    let means = aggregate_to_period(&data.radiance, Frequency::Quarterly);
    let (records, _) = join_records(&means, &gdp, &data.centroids, false);

    for features in [FeatureSpec::NIGHTLIGHT_ONLY, FeatureSpec::FULL] {
        let (train, test) =
            split_by_years(&records, &spec.train_years(), &spec.test_years(), features)?;
        let model = ols_fit(&train.x, &train.y, DEFAULT_RIDGE_EPSILON)?;
        let predicted = linreg_predict(&model, &test.x)?;
        let rows = test
            .keys
            .iter()
            .zip(&test.y)
            .zip(&predicted)
            .map(|((k, &a), &p)| RegionPrediction::new(k.to_string(), a, p))
            .collect();
        let pooled = weighted_error(&EvaluationInput::new(rows)?);
        println!(
            "{features}: coefficients {:?}, intercept {:.1}, pooled weighted error {:.3}",
            model.coefficients, model.intercept, pooled.total
        );
    }
    Ok(())
}
