//! Simulate a small scenario, build the dataset, train the network and
//! score it against ARIMA.
//!
//! ```text
//! cargo run --release --example quickstart
//! ```

use regnl::runner::{
    cmd_build_dataset, cmd_compare, cmd_simulate, cmd_train, ExperimentConfig, ModelKind,
    SimulationSpec,
};

fn main() -> regnl::Result<()> {
    let dir = std::env::temp_dir().join("regnl-quickstart");
    let spec = SimulationSpec {
        regions: 20,
        ..SimulationSpec::default()
    };
    let files = cmd_simulate(&spec, &dir)?;

    let mut config = ExperimentConfig::from_file(&files.config)?;
    config.mlp.epochs = 20_000;
    config.models = vec![ModelKind::Regnl, ModelKind::Arima];

    let built = cmd_build_dataset(&config)?;
    println!("{} rows in {}", built.rows, built.dataset.display());
    for t in cmd_train(&config)? {
        println!("trained {} in {:.1} s", t.model, t.wall_time.as_secs_f64());
    }
    print!("{}", cmd_compare(&config)?.render_text());
    Ok(())
}
