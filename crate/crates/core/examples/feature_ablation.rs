//! Nightlight alone against nightlight plus coordinates, per test period.

use regnl::dataset::FeatureSpec;
use regnl::runner::{
    cmd_build_dataset, cmd_evaluate, cmd_simulate, cmd_train, ExperimentConfig, ModelKind,
    SimulationSpec,
};

fn main() -> regnl::Result<()> {
    let dir = std::env::temp_dir().join("regnl-ablation");
    let files = cmd_simulate(
        &SimulationSpec {
            regions: 25,
            ..SimulationSpec::default()
        },
        &dir,
    )?;
    let mut config = ExperimentConfig::from_file(&files.config)?;
    config.mlp.epochs = 20_000;
    config.models = vec![ModelKind::Regnl];
    cmd_build_dataset(&config)?;

    for features in [FeatureSpec::NIGHTLIGHT_ONLY, FeatureSpec::FULL] {
        config.features = features;
        cmd_train(&config)?;
        println!("{}", cmd_evaluate(&config, None)?.render_text());
    }
    Ok(())
}
