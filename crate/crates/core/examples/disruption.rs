//! A sharp drop in one test quarter: the network sees it through the
//! nightlights, ARIMA only extrapolates.

use regnl::runner::{
    cmd_build_dataset, cmd_compare, cmd_simulate, cmd_train, Disruption, ExperimentConfig,
    ModelKind, SimulationSpec,
};

fn main() -> regnl::Result<()> {
    let spec = SimulationSpec {
        regions: 25,
        disruption: Some(Disruption {
            test_period: 6,
            severity: 0.7,
        }),
        ..SimulationSpec::default()
    };
    let (year, period) = spec.disruption_key().expect("disruption is set");
    let dir = std::env::temp_dir().join("regnl-disruption");
    let files = cmd_simulate(&spec, &dir)?;

    let mut config = ExperimentConfig::from_file(&files.config)?;
    config.mlp.epochs = 20_000;
    config.models = vec![ModelKind::Regnl, ModelKind::Arima];
    cmd_build_dataset(&config)?;
    cmd_train(&config)?;
    let report = cmd_compare(&config)?;

    for kind in [ModelKind::Regnl, ModelKind::Arima] {
        let err = report.model(kind).and_then(|m| m.error_at(year, period));
        println!("{kind} in {year} {period}: {err:.3?}");
    }
    Ok(())
}
