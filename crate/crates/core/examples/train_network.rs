//! The network on its own: scale, train, predict and save.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regnl::dataset::{
    fit_scaler, inverse_transform_target, transform, FeatureSpec, SupervisedDataset,
};
use regnl::ingest::{Period, RegionQuarterRecord};
use regnl::mlp::{load_model, predict_batch, save_model, train, MlpConfig};
use regnl::runner::gdp_surface;

fn records(n: usize, seed: u64) -> Vec<RegionQuarterRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (lat, lon, light) = (
                rng.gen_range(25.0..49.0),
                rng.gen_range(-124.0..-67.0),
                rng.gen_range(0.5..40.0),
            );
            RegionQuarterRecord {
                region_id: format!("r{i}"),
                year: 2015,
                period: Period::Quarter(1),
                latitude: lat,
                longitude: lon,
                mean_nightlight: light,
                gdp: gdp_surface(light, lat, lon),
            }
        })
        .collect()
}

fn main() -> regnl::Result<()> {
    let (train_rows, test_rows) = (records(200, 1), records(20, 2));
    let spec = FeatureSpec::FULL;
    let train_set =
        SupervisedDataset::from_records("train", &train_rows.iter().collect::<Vec<_>>(), spec)?;
    let test_set =
        SupervisedDataset::from_records("test", &test_rows.iter().collect::<Vec<_>>(), spec)?;

    let scaler = fit_scaler(&train_set)?;
    let scaled = transform(&train_set, &scaler)?;
    let config = MlpConfig {
        epochs: 5_000,
        ..MlpConfig::new(spec.dim())
    };
    let (params, trace) = train(&scaled.x, &scaled.y, &config)?;
    println!(
        "{} epochs, final scaled MSE {:.5}",
        config.epochs, trace.final_loss
    );

    let predicted = inverse_transform_target(
        &predict_batch(&transform(&test_set, &scaler)?.x, &params)?,
        &scaler,
    );
    for (actual, p) in test_set.y.iter().zip(&predicted).take(5) {
        println!("actual {actual:>12.1}  predicted {p:>12.1}");
    }

    let path = std::env::temp_dir().join("regnl-network.json");
    save_model(&params, &scaler, &config, &path)?;
    let reloaded = load_model(&path)?;
    assert_eq!(reloaded.params, params);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
