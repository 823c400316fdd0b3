//! Run the complete multi-seed experiment for one benchmark and print the
//! report with the published reference comparison. Pass the benchmark name
//! as an argument (default: mackey_glass).
//!
//!     cargo run --release -p toreesnn --example full_experiment -- henon

use toreesnn::experiment::{
    report_to_text, run_experiment, write_experiment_outputs, Benchmark, ExperimentConfig,
};

fn main() -> toreesnn::Result<()> {
    let benchmark: Benchmark = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("mackey_glass")
        .parse()?;
    let cfg = ExperimentConfig::for_benchmark(benchmark);

    println!(
        "running {} with seeds {:?}, split {}/{}/{} after {} warm-up samples\n",
        benchmark.name(),
        cfg.seeds,
        cfg.split[0],
        cfg.split[1],
        cfg.split[2],
        cfg.warmup
    );
    let run = run_experiment(&cfg)?;
    print!("{}", report_to_text(&run.report));

    let out_dir = std::path::PathBuf::from(format!("experiment_out_{}", benchmark.name()));
    write_experiment_outputs(&run, &out_dir)?;
    println!("\nreport.txt, report.csv, and per-seed traces written to {}", out_dir.display());
    Ok(())
}
