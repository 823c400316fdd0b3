//! Generate all four chaotic benchmark series, normalize them, and write
//! CSV files with metadata sidecars into ./series_out.
//!
//!     cargo run --release -p toreesnn --example generate_series

use std::fs;

use toreesnn::experiment::{generate_series, Benchmark, ExperimentConfig};
use toreesnn::series::{normalize, series_metadata, series_to_csv};

fn main() -> toreesnn::Result<()> {
    let out_dir = std::path::Path::new("series_out");
    fs::create_dir_all(out_dir)?;

    for benchmark in Benchmark::ALL {
        let cfg = ExperimentConfig::for_benchmark(benchmark);
        let seed = 1;
        let raw = generate_series(&cfg, 1000, seed)?;
        let series = normalize(&raw)?;

        let min = raw.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = raw.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let preview: Vec<f64> = series.values()[..4]
            .iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect();
        println!(
            "{:>12}: 1000 samples, raw range [{min:.4}, {max:.4}], first normalized values {preview:?}",
            benchmark.name(),
        );

        let csv_path = out_dir.join(format!("{}.csv", benchmark.name()));
        fs::write(&csv_path, series_to_csv(&series))?;
        let seed_used = matches!(benchmark, Benchmark::Narma).then_some(seed);
        fs::write(
            out_dir.join(format!("{}.csv.meta", benchmark.name())),
            series_metadata(&series, &cfg.params_string(), seed_used),
        )?;
        println!("{:>12}  wrote {}", "", csv_path.display());
    }
    Ok(())
}
