//! The GDP-share-weighted error and its per-region terms.

use regnl::metrics::{mape, weighted_error, EvaluationInput, RegionPrediction};

fn main() -> regnl::Result<()> {
    let input = EvaluationInput::new(vec![
        RegionPrediction::new("California", 800.0, 760.0),
        RegionPrediction::new("Texas", 600.0, 630.0),
        RegionPrediction::new("Vermont", 100.0, 150.0),
    ])?;

    let report = weighted_error(&input);
    println!("national GDP {}", input.national());
    println!("weighted error {:.4}", report.total);
    println!("MAPE {:.4}", mape(&input));

    // The small region's 50% miss counts for its GDP share only.
    report
        .write_terms(std::io::stdout().lock())
        .expect("stdout is writable");
    Ok(())
}
