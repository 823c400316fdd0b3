//! Command-line front end: generate benchmark series, run the full
//! forecasting experiment, or run the gradient oracle suite. All logic
//! lives in the library; this binary only parses arguments and maps errors
//! to exit codes (0 success, 1 usage, 2 stage failure, 3 divergence).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use toreesnn::error::Error;
use toreesnn::experiment::{
    config_to_text, generate_series, parse_config, report_to_text, run_experiment,
    run_gradcheck_suite, write_experiment_outputs, Benchmark, ExperimentConfig,
};
use toreesnn::series::{normalize, series_metadata, series_to_csv};

fn config_docs() -> String {
    format!(
        "CONFIG FILE: flat `key = value` lines; `#` starts a comment; unknown keys are errors.\n\
         All keys with their defaults (shown for benchmark = mackey_glass;\n\
         epochs_forecaster defaults to 1000 for narma, lorenz, and henon):\n\n{}",
        config_to_text(&ExperimentConfig::for_benchmark(Benchmark::MackeyGlass))
    )
}

#[derive(Parser)]
#[command(
    name = "toreesnn",
    about = "Chaotic time-series forecasting with recursive exponential-smoothing networks and Taylor error correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a benchmark series as CSV plus a metadata sidecar (<out>.meta).
    Gen {
        /// mackey_glass, narma, lorenz, or henon
        benchmark: String,
        /// Number of samples to generate
        #[arg(long)]
        n: usize,
        /// RNG seed (only NARMA draws random inputs)
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Normalize the series to [0, 1] before writing
        #[arg(long)]
        normalize: bool,
    },
    /// Run the full pipeline for a config file and write report + traces.
    #[command(after_help = config_docs())]
    Experiment {
        /// Path to the `key = value` config file
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.txt, report.csv, and trace_<seed>.csv
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the backpropagation gradient oracle suite; exits 0 iff all pass.
    Gradcheck {
        /// Random networks per architecture shape
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// RNG seed for the generated networks
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    if err.is_divergence() {
        3
    } else {
        match err {
            Error::Stage { .. } | Error::Io(_) => 2,
            Error::Divergence { .. } => 3,
            _ => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen {
            benchmark,
            n,
            seed,
            out,
            normalize: do_normalize,
        } => {
            let benchmark: Benchmark = benchmark.parse()?;
            let cfg = ExperimentConfig::for_benchmark(benchmark);
            let mut series = generate_series(&cfg, n, seed)?;
            if do_normalize {
                series = normalize(&series)?;
            }
            std::fs::write(&out, series_to_csv(&series))?;
            let meta_path = out.with_extension(match out.extension() {
                Some(ext) => format!("{}.meta", ext.to_string_lossy()),
                None => "meta".to_string(),
            });
            let seed_used = matches!(benchmark, Benchmark::Narma).then_some(seed);
            std::fs::write(
                &meta_path,
                series_metadata(&series, &cfg.params_string(), seed_used),
            )?;
            println!("wrote {} samples to {}", series.len(), out.display());
            println!("metadata sidecar: {}", meta_path.display());
            Ok(())
        }
        Command::Experiment { config, out_dir } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                Error::invalid("config", format!("cannot read {}: {e}", config.display()))
            })?;
            let cfg = parse_config(&text)?;
            let run = run_experiment(&cfg)?;
            write_experiment_outputs(&run, &out_dir)?;
            print!("{}", report_to_text(&run.report));
            println!("\noutputs written to {}", out_dir.display());
            Ok(())
        }
        Command::Gradcheck { count, seed } => {
            let report = run_gradcheck_suite(count, seed)?;
            println!(
                "checked {} networks ({count} forecaster-shaped, {count} classifier-shaped)",
                report.deviations.len()
            );
            println!(
                "max relative deviation: {:.3e} (tolerance {:.0e})",
                report.max_deviation(),
                report.tolerance
            );
            if report.passed() {
                println!("gradcheck: PASS");
                Ok(())
            } else {
                println!("gradcheck: FAIL");
                Err(Error::invalid(
                    "gradcheck",
                    format!(
                        "max deviation {:.3e} exceeds {:.0e}",
                        report.max_deviation(),
                        report.tolerance
                    ),
                )
                .in_stage("gradcheck", seed))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
