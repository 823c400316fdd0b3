//! The full three-stage fusion on one seed: train the forecaster, learn the
//! error classifier, calibrate ω, then apply the first-order Taylor
//! correction and compare raw vs corrected test MSE.
//!
//!     cargo run --release -p toreesnn --example correct_forecasts

use toreesnn::experiment::{
    generate_benchmark, run_seed, split_series, Benchmark, ExperimentConfig,
};
use toreesnn::series::normalize;

fn main() -> toreesnn::Result<()> {
    let cfg = ExperimentConfig::for_benchmark(Benchmark::MackeyGlass);
    let seed = 1;

    let raw = generate_benchmark(&cfg, seed)?;
    let series = normalize(&raw)?;
    let (train_a, train_b, test) = split_series(&series, &cfg)?;
    let artifacts = run_seed(&cfg, seed, &train_a, &train_b, &test)?;

    let r = &artifacts.record;
    println!("seed {seed} on {}:", cfg.benchmark.name());
    println!("  δ = {:.4e}, ω = {:.4e}", r.delta, r.omega);
    println!("  raw test MSE:       {:.4e}", r.mse_test_reesnn);
    println!("  corrected test MSE: {:.4e}", r.mse_test_toreesnn);

    println!("\nsample corrected records:");
    println!("  {:>4} {:>9} {:>9} {:>6} {:>9} {:>9}", "t", "actual", "raw", "class", "est_err", "corrected");
    for record in artifacts.test_records.iter().skip(cfg.d).take(8) {
        println!(
            "  {:>4} {:>9.5} {:>9.5} {:>6} {:>9.5} {:>9.5}",
            record.t,
            record.actual,
            record.raw_forecast,
            record.error_class.map(|c| c.to_string()).unwrap_or_default(),
            record.estimated_error.unwrap_or(f64::NAN),
            record.corrected_forecast.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
