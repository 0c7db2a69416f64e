//! Annual periods: radiance averaged over twelve months, one row per
//! region-year.

use regnl::ingest::Frequency;
use regnl::runner::{
    cmd_build_dataset, cmd_compare, cmd_simulate, cmd_train, ExperimentConfig, ModelKind,
    SimulationSpec,
};

fn main() -> regnl::Result<()> {
    let spec = SimulationSpec {
        frequency: Frequency::Annual,
        train_periods: 5,
        test_periods: 2,
        disruption: None,
        ..SimulationSpec::default()
    };
    let dir = std::env::temp_dir().join("regnl-annual");
    let files = cmd_simulate(&spec, &dir)?;

    let mut config = ExperimentConfig::from_file(&files.config)?;
    config.mlp.epochs = 10_000;
    config.models = vec![ModelKind::Regnl, ModelKind::Linreg];
    let built = cmd_build_dataset(&config)?;
    println!("{} region-years", built.rows);
    cmd_train(&config)?;
    print!("{}", cmd_compare(&config)?.render_text());
    Ok(())
}
