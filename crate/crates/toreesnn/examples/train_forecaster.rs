//! Train the recursive forecaster one-step-ahead on Mackey-Glass and
//! evaluate it on a held-out segment.
//!
//!     cargo run --release -p toreesnn --example train_forecaster

use toreesnn::nn::mse;
use toreesnn::reesnn::{build_reesnn, reesnn_forecast, train_reesnn};
use toreesnn::series::{gen_mackey_glass, normalize, MgParams};

fn main() -> toreesnn::Result<()> {
    let params = MgParams::default();
    let raw = gen_mackey_glass(&params, 1100, &params.default_history())?;
    let series = normalize(&raw)?;
    let train = series.slice(100, 600)?;
    let test = series.slice(600, 1100)?;

    let (k, hidden, seed) = (5, 10, 1);
    let model = build_reesnn(k, hidden, seed)?;
    println!("training k={k} H={hidden} forecaster on 500 Mackey-Glass samples");

    let outcome = train_reesnn(&model, &train, 200, 0.1)?;
    for epoch in [0, 9, 49, 99, 199] {
        println!("  epoch {:>3}: training MSE {:.4e}", epoch + 1, outcome.epoch_mse[epoch]);
    }

    let records = reesnn_forecast(&outcome.model, &test, k)?;
    let actuals: Vec<f64> = records.iter().map(|r| r.actual).collect();
    let forecasts: Vec<f64> = records.iter().map(|r| r.raw_forecast).collect();
    println!("held-out one-step-ahead MSE: {:.4e}", mse(&actuals, &forecasts)?);
    println!("\nlast five steps (actual vs forecast):");
    for r in &records[records.len() - 5..] {
        println!("  t={:>3}  {:.5}  {:.5}  (error {:+.5})", r.t, r.actual, r.raw_forecast, r.error);
    }
    Ok(())
}
