//! Regional GDP nowcasting from nighttime-light radiance.
//!
//! The crate builds a joined `(region, period)` table of mean radiance, region
//! centroid and rebased GDP, trains an eight-hidden-layer ReLU regressor on it,
//! and scores predictions with a GDP-share-weighted error. Per-region ARIMA and
//! ordinary least squares serve as baselines.
//!
//! | module        | what it does                                                     |
//! |---------------|------------------------------------------------------------------|
//! | [`ingest`]    | CSV parsing, period aggregation, deflator rebasing, inner join   |
//! | [`dataset`]   | year splits, feature ablation, min-max / z-score scaling         |
//! | [`mlp`]       | the feed-forward regressor, backprop, full-batch training, I/O   |
//! | [`arima`]     | differencing, CSS estimation, AICc order search, forecasting     |
//! | [`baselines`] | ordinary least squares with a small ridge stabilizer             |
//! | [`metrics`]   | the weighted error and MAPE                                      |
//! | [`runner`]    | experiment configs, synthetic scenarios, reports and plot data   |
//!
//! Each capability has a runnable program under `examples/`; start with
//! `cargo run --release --example quickstart`.

pub mod arima;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod runner;

pub use error::{Error, Result};
