//! End-to-end experiment driver: generate a benchmark series, normalize,
//! split 500/500/500, train the forecaster on the first split, harvest its
//! errors on the second to pick δ, train the error classifier and calibrate
//! ω there, then evaluate raw and corrected forecasts on the held-out third
//! split and report MSE next to the published reference values.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::errclass::{
    self, build_classifier_dataset, calibrate_omega, select_delta, ClassifiedSample,
    ErrorClassifierModel,
};
use crate::error::{Error, Result};
use crate::nn::{self, Activation, DenseLayer, Network};
use crate::reesnn::{
    self, build_reesnn, records_to_csv, reesnn_forecast, train_reesnn, ForecastRecord,
    ReesnnModel,
};
use crate::series::{
    self, gen_henon, gen_lorenz, gen_mackey_glass, gen_narma, HenonParams, LorenzParams,
    MgParams, NarmaParams, TimeSeries,
};
use crate::taylor::{correct_records, CorrectionConfig};

/// Reported MSE-test results for this method on the four benchmarks, used
/// as reference constants when rendering comparisons. No pass/fail meaning
/// is attached to them.
pub mod reference_mse {
    pub const MACKEY_GLASS_REESNN: f64 = 2.07e-4;
    pub const MACKEY_GLASS_TOREESNN: f64 = 1.91e-4;
    pub const NARMA_REESNN: f64 = 1.20e-2;
    pub const NARMA_TOREESNN: f64 = 2.00e-3;
    pub const LORENZ_REESNN: f64 = 3.93e-6;
    pub const LORENZ_TOREESNN: f64 = 3.90e-6;
    pub const HENON_REESNN: f64 = 9.70e-4;
    pub const HENON_TOREESNN: f64 = 8.23e-4;
}

/// Distinct RNG stream for classifier initialization so it never shares
/// draws with the forecaster built from the same experiment seed.
const CLASSIFIER_SEED_SALT: u64 = 0x636c_6173_7369_6679;

/// The four benchmark systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    MackeyGlass,
    Narma,
    Lorenz,
    Henon,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::MackeyGlass,
        Benchmark::Narma,
        Benchmark::Lorenz,
        Benchmark::Henon,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::MackeyGlass => "mackey_glass",
            Benchmark::Narma => "narma",
            Benchmark::Lorenz => "lorenz",
            Benchmark::Henon => "henon",
        }
    }

    /// Published (reference REESNN MSE, reference TOREESNN MSE).
    pub fn reference(&self) -> (f64, f64) {
        use reference_mse::*;
        match self {
            Benchmark::MackeyGlass => (MACKEY_GLASS_REESNN, MACKEY_GLASS_TOREESNN),
            Benchmark::Narma => (NARMA_REESNN, NARMA_TOREESNN),
            Benchmark::Lorenz => (LORENZ_REESNN, LORENZ_TOREESNN),
            Benchmark::Henon => (HENON_REESNN, HENON_TOREESNN),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mackey_glass" | "mackey-glass" | "mg" => Ok(Benchmark::MackeyGlass),
            "narma" => Ok(Benchmark::Narma),
            "lorenz" => Ok(Benchmark::Lorenz),
            "henon" => Ok(Benchmark::Henon),
            other => Err(Error::Parse(format!(
                "unknown benchmark `{other}` (expected mackey_glass, narma, lorenz, or henon)"
            ))),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hidden-layer activation choice for the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Sigmoid,
    Hyperbolic,
}

impl HiddenActivation {
    fn to_activation(self) -> Result<Activation> {
        match self {
            HiddenActivation::Sigmoid => Activation::sigmoid(1.0),
            HiddenActivation::Hyperbolic => Ok(Activation::hyperbolic()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            HiddenActivation::Sigmoid => "sigmoid",
            HiddenActivation::Hyperbolic => "hyperbolic",
        }
    }
}

/// Everything a full experiment run needs: benchmark choice and generator
/// parameters, network sizes, training hyperparameters, δ/ω selection
/// settings, seeds, and split layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub mg: MgParams,
    /// Constant value filling the Mackey-Glass warm-up history.
    pub mg_init: f64,
    pub narma: NarmaParams,
    pub lorenz: LorenzParams,
    pub henon: HenonParams,
    /// Forecaster lag order.
    pub k: usize,
    /// Forecaster hidden width.
    pub hidden: usize,
    /// Classifier error-window width.
    pub d: usize,
    /// Classifier hidden width.
    pub hc: usize,
    pub epochs_forecaster: usize,
    pub epochs_classifier: usize,
    pub lr_forecaster: f64,
    pub lr_classifier: f64,
    /// Quantile mass used to pick δ from the error distribution.
    pub delta_mass: f64,
    /// ω candidates expressed as multiples of the selected δ.
    pub omega_candidates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub split: [usize; 3],
    /// Samples discarded ahead of the first split to skip transients.
    pub warmup: usize,
    pub classifier_hidden_activation: HiddenActivation,
}

impl ExperimentConfig {
    pub fn for_benchmark(benchmark: Benchmark) -> Self {
        // The smooth benchmarks keep learning well past 200 epochs under
        // online updates with recursive inputs; Mackey-Glass both meets its
        // accuracy band at 200 and retains the error structure the
        // correction stage exploits.
        let epochs_forecaster = match benchmark {
            Benchmark::MackeyGlass => reesnn::DEFAULT_EPOCHS,
            Benchmark::Narma | Benchmark::Lorenz | Benchmark::Henon => 1000,
        };
        ExperimentConfig {
            benchmark,
            mg: MgParams::default(),
            mg_init: 1.2,
            narma: NarmaParams::default(),
            lorenz: LorenzParams::default(),
            henon: HenonParams::default(),
            k: reesnn::DEFAULT_K,
            hidden: reesnn::DEFAULT_HIDDEN,
            d: errclass::DEFAULT_WINDOW,
            hc: errclass::DEFAULT_HIDDEN,
            epochs_forecaster,
            epochs_classifier: errclass::DEFAULT_EPOCHS,
            lr_forecaster: reesnn::DEFAULT_LEARNING_RATE,
            lr_classifier: errclass::DEFAULT_LEARNING_RATE,
            delta_mass: 0.5,
            omega_candidates: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seeds: vec![1, 2, 3, 4, 5],
            split: [500, 500, 500],
            warmup: 100,
            classifier_hidden_activation: HiddenActivation::Sigmoid,
        }
    }

    /// Total samples generated per run: warmup prefix plus the three splits.
    pub fn total_len(&self) -> usize {
        self.warmup + self.split.iter().sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "need at least one seed"));
        }
        if self.split.contains(&0) {
            return Err(Error::invalid("split", "split counts must be positive"));
        }
        if self.k < 1 || self.hidden < 1 || self.d < 1 || self.hc < 1 {
            return Err(Error::invalid("sizes", "k, hidden, d, hc must all be at least 1"));
        }
        if self.warmup < self.k.max(self.d) {
            return Err(Error::invalid(
                "warmup",
                format!("must be at least max(k, d) = {}", self.k.max(self.d)),
            ));
        }
        for (name, len) in [
            ("split_a", self.split[0]),
            ("split_b", self.split[1]),
            ("split_c", self.split[2]),
        ] {
            if len <= self.k + 1 {
                return Err(Error::invalid(
                    "split",
                    format!("{name} must exceed k+1 = {}", self.k + 1),
                ));
            }
        }
        // Split B must yield enough errors to window into a dataset.
        if self.split[1] <= self.k + self.d + 1 {
            return Err(Error::invalid(
                "split",
                format!("split_b must exceed k+d+1 = {}", self.k + self.d + 1),
            ));
        }
        if self.delta_mass.is_nan() || self.delta_mass <= 0.0 || self.delta_mass >= 1.0 {
            return Err(Error::invalid("delta_mass", "must lie in (0, 1)"));
        }
        if self.omega_candidates.is_empty() {
            return Err(Error::invalid("omega_candidates", "need at least one candidate"));
        }
        if self
            .omega_candidates
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::invalid(
                "omega_candidates",
                "multiples must be finite and non-negative",
            ));
        }
        for lr in [self.lr_forecaster, self.lr_classifier] {
            if !lr.is_finite() || lr < 0.0 {
                return Err(Error::invalid("learning rates", "must be finite and non-negative"));
            }
        }
        if self.epochs_forecaster < 1 || self.epochs_classifier < 1 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        Ok(())
    }

    /// One-line generator parameter summary for metadata sidecars.
    pub fn params_string(&self) -> String {
        match self.benchmark {
            Benchmark::MackeyGlass => format!(
                "a={} b={} tau={} step={} init={}",
                self.mg.a, self.mg.b, self.mg.tau, self.mg.step, self.mg_init
            ),
            Benchmark::Narma => format!(
                "k={} c1={} c2={} c3={} c4={} input_low={} input_high={}",
                self.narma.k,
                self.narma.c1,
                self.narma.c2,
                self.narma.c3,
                self.narma.c4,
                self.narma.input_low,
                self.narma.input_high
            ),
            Benchmark::Lorenz => format!(
                "sigma={} r={} b={} dt={} subsample={} x0={} y0={} z0={}",
                self.lorenz.sigma,
                self.lorenz.r,
                self.lorenz.b,
                self.lorenz.dt,
                self.lorenz.subsample,
                self.lorenz.x0,
                self.lorenz.y0,
                self.lorenz.z0
            ),
            Benchmark::Henon => format!(
                "a={} b={} x0={} y0={}",
                self.henon.a, self.henon.b, self.henon.x0, self.henon.y0
            ),
        }
    }
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders a config as the flat `key = value` text the CLI accepts; also
/// serves as the documentation of every key and its default.
pub fn config_to_text(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    kv("benchmark", cfg.benchmark.name().to_string());
    kv("k", cfg.k.to_string());
    kv("hidden", cfg.hidden.to_string());
    kv("d", cfg.d.to_string());
    kv("hc", cfg.hc.to_string());
    kv("epochs_forecaster", cfg.epochs_forecaster.to_string());
    kv("epochs_classifier", cfg.epochs_classifier.to_string());
    kv("lr_forecaster", cfg.lr_forecaster.to_string());
    kv("lr_classifier", cfg.lr_classifier.to_string());
    kv("delta_mass", cfg.delta_mass.to_string());
    kv("omega_candidates", join_f64(&cfg.omega_candidates));
    kv(
        "seeds",
        cfg.seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    kv(
        "split",
        format!("{},{},{}", cfg.split[0], cfg.split[1], cfg.split[2]),
    );
    kv("warmup", cfg.warmup.to_string());
    kv(
        "classifier_hidden_activation",
        cfg.classifier_hidden_activation.name().to_string(),
    );
    kv("mg_a", cfg.mg.a.to_string());
    kv("mg_b", cfg.mg.b.to_string());
    kv("mg_tau", cfg.mg.tau.to_string());
    kv("mg_step", cfg.mg.step.to_string());
    kv("mg_init", cfg.mg_init.to_string());
    kv("narma_k", cfg.narma.k.to_string());
    kv("narma_c1", cfg.narma.c1.to_string());
    kv("narma_c2", cfg.narma.c2.to_string());
    kv("narma_c3", cfg.narma.c3.to_string());
    kv("narma_c4", cfg.narma.c4.to_string());
    kv("narma_input_low", cfg.narma.input_low.to_string());
    kv("narma_input_high", cfg.narma.input_high.to_string());
    kv("lorenz_sigma", cfg.lorenz.sigma.to_string());
    kv("lorenz_r", cfg.lorenz.r.to_string());
    kv("lorenz_b", cfg.lorenz.b.to_string());
    kv("lorenz_dt", cfg.lorenz.dt.to_string());
    kv("lorenz_subsample", cfg.lorenz.subsample.to_string());
    kv("lorenz_x0", cfg.lorenz.x0.to_string());
    kv("lorenz_y0", cfg.lorenz.y0.to_string());
    kv("lorenz_z0", cfg.lorenz.z0.to_string());
    kv("henon_a", cfg.henon.a.to_string());
    kv("henon_b", cfg.henon.b.to_string());
    kv("henon_x0", cfg.henon.x0.to_string());
    kv("henon_y0", cfg.henon.y0.to_string());
    out
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Parse(format!("key `{key}`: expected an integer, got `{v}`")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::Parse(format!("key `{key}`: expected an integer, got `{v}`")))
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Parse(format!("key `{key}`: expected a number, got `{v}`")))
}

fn parse_float_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| parse_float(key, t.trim()))
        .collect()
}

/// Parses the flat `key = value` config format. Lines starting with `#` and
/// blank lines are skipped; unknown keys are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    // Defaults depend on the benchmark, so find that key first and start
    // from its defaults before applying the remaining overrides.
    let mut benchmark = Benchmark::MackeyGlass;
    for line in text.lines() {
        let line = line.trim();
        if let Some(value) = line.strip_prefix("benchmark") {
            if let Some(value) = value.trim_start().strip_prefix('=') {
                benchmark = value.trim().parse()?;
            }
        }
    }
    let mut cfg = ExperimentConfig::for_benchmark(benchmark);

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "benchmark" => cfg.benchmark = value.parse()?,
            "k" => cfg.k = parse_usize(key, value)?,
            "hidden" => cfg.hidden = parse_usize(key, value)?,
            "d" => cfg.d = parse_usize(key, value)?,
            "hc" => cfg.hc = parse_usize(key, value)?,
            "epochs_forecaster" => cfg.epochs_forecaster = parse_usize(key, value)?,
            "epochs_classifier" => cfg.epochs_classifier = parse_usize(key, value)?,
            "lr_forecaster" => cfg.lr_forecaster = parse_float(key, value)?,
            "lr_classifier" => cfg.lr_classifier = parse_float(key, value)?,
            "delta_mass" => cfg.delta_mass = parse_float(key, value)?,
            "omega_candidates" => cfg.omega_candidates = parse_float_list(key, value)?,
            "seeds" => {
                cfg.seeds = value
                    .split(',')
                    .map(|t| parse_u64(key, t.trim()))
                    .collect::<Result<Vec<u64>>>()?
            }
            "split" => {
                let parts = value
                    .split(',')
                    .map(|t| parse_usize(key, t.trim()))
                    .collect::<Result<Vec<usize>>>()?;
                if parts.len() != 3 {
                    return Err(Error::Parse(format!(
                        "key `split`: expected three comma-separated counts, got `{value}`"
                    )));
                }
                cfg.split = [parts[0], parts[1], parts[2]];
            }
            "warmup" => cfg.warmup = parse_usize(key, value)?,
            "classifier_hidden_activation" => {
                cfg.classifier_hidden_activation = match value {
                    "sigmoid" => HiddenActivation::Sigmoid,
                    "hyperbolic" => HiddenActivation::Hyperbolic,
                    other => {
                        return Err(Error::Parse(format!(
                            "key `classifier_hidden_activation`: expected sigmoid or hyperbolic, got `{other}`"
                        )))
                    }
                }
            }
            "mg_a" => cfg.mg.a = parse_float(key, value)?,
            "mg_b" => cfg.mg.b = parse_float(key, value)?,
            "mg_tau" => cfg.mg.tau = parse_usize(key, value)?,
            "mg_step" => cfg.mg.step = parse_float(key, value)?,
            "mg_init" => cfg.mg_init = parse_float(key, value)?,
            "narma_k" => cfg.narma.k = parse_usize(key, value)?,
            "narma_c1" => cfg.narma.c1 = parse_float(key, value)?,
            "narma_c2" => cfg.narma.c2 = parse_float(key, value)?,
            "narma_c3" => cfg.narma.c3 = parse_float(key, value)?,
            "narma_c4" => cfg.narma.c4 = parse_float(key, value)?,
            "narma_input_low" => cfg.narma.input_low = parse_float(key, value)?,
            "narma_input_high" => cfg.narma.input_high = parse_float(key, value)?,
            "lorenz_sigma" => cfg.lorenz.sigma = parse_float(key, value)?,
            "lorenz_r" => cfg.lorenz.r = parse_float(key, value)?,
            "lorenz_b" => cfg.lorenz.b = parse_float(key, value)?,
            "lorenz_dt" => cfg.lorenz.dt = parse_float(key, value)?,
            "lorenz_subsample" => cfg.lorenz.subsample = parse_usize(key, value)?,
            "lorenz_x0" => cfg.lorenz.x0 = parse_float(key, value)?,
            "lorenz_y0" => cfg.lorenz.y0 = parse_float(key, value)?,
            "lorenz_z0" => cfg.lorenz.z0 = parse_float(key, value)?,
            "henon_a" => cfg.henon.a = parse_float(key, value)?,
            "henon_b" => cfg.henon.b = parse_float(key, value)?,
            "henon_x0" => cfg.henon.x0 = parse_float(key, value)?,
            "henon_y0" => cfg.henon.y0 = parse_float(key, value)?,
            other => {
                return Err(Error::Parse(format!("unknown config key `{other}`")));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Generates `n` samples of the configured benchmark. The seed affects only
/// benchmarks with random inputs (NARMA); the others are fully deterministic
/// in their parameters.
pub fn generate_series(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<TimeSeries> {
    match cfg.benchmark {
        Benchmark::MackeyGlass => {
            let history = vec![cfg.mg_init; cfg.mg.tau + 1];
            gen_mackey_glass(&cfg.mg, n, &history)
        }
        Benchmark::Narma => Ok(gen_narma(&cfg.narma, n, seed)?.0),
        Benchmark::Lorenz => gen_lorenz(&cfg.lorenz, n),
        Benchmark::Henon => gen_henon(&cfg.henon, n),
    }
}

/// Generates the configured benchmark at the full experiment length.
pub fn generate_benchmark(cfg: &ExperimentConfig, seed: u64) -> Result<TimeSeries> {
    generate_series(cfg, cfg.total_len(), seed)
}

/// Cuts the normalized series into the three contiguous splits that follow
/// the warm-up prefix: forecaster training, error training, and test.
pub fn split_series(
    s: &TimeSeries,
    cfg: &ExperimentConfig,
) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    let needed = cfg.total_len();
    if s.len() < needed {
        return Err(Error::invalid(
            "series",
            format!("need {needed} samples for warmup + splits, got {}", s.len()),
        ));
    }
    let a0 = cfg.warmup;
    let a1 = a0 + cfg.split[0];
    let b1 = a1 + cfg.split[1];
    let c1 = b1 + cfg.split[2];
    Ok((s.slice(a0, a1)?, s.slice(a1, b1)?, s.slice(b1, c1)?))
}

/// Per-seed summary row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRecord {
    pub seed: u64,
    pub mse_train_reesnn: f64,
    pub mse_test_reesnn: f64,
    pub mse_test_toreesnn: f64,
    pub delta: f64,
    pub omega: f64,
    pub classifier_accuracy: f64,
}

/// Everything produced while running one seed, kept for traces and tests.
#[derive(Debug, Clone)]
pub struct SeedArtifacts {
    pub record: SeedRecord,
    pub forecaster: ReesnnModel,
    pub classifier: ErrorClassifierModel,
    pub epoch_mse: Vec<f64>,
    /// Corrected test records (the trace CSV rows).
    pub test_records: Vec<ForecastRecord>,
}

/// Aggregate of the per-seed numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedStats {
    pub mse_train_reesnn: f64,
    pub mse_test_reesnn: f64,
    pub mse_test_toreesnn: f64,
    pub delta: f64,
    pub omega: f64,
    pub classifier_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub benchmark: Benchmark,
    pub records: Vec<SeedRecord>,
    pub median: SeedStats,
    pub min: SeedStats,
    /// Published (REESNN, TOREESNN) reference MSEs for this benchmark.
    pub reference: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub report: ExperimentReport,
    pub artifacts: Vec<SeedArtifacts>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn aggregate(records: &[SeedRecord], f: impl Fn(&mut [f64]) -> f64) -> SeedStats {
    let col = |get: fn(&SeedRecord) -> f64| {
        let mut v: Vec<f64> = records.iter().map(get).collect();
        f(&mut v)
    };
    SeedStats {
        mse_train_reesnn: col(|r| r.mse_train_reesnn),
        mse_test_reesnn: col(|r| r.mse_test_reesnn),
        mse_test_toreesnn: col(|r| r.mse_test_toreesnn),
        delta: col(|r| r.delta),
        omega: col(|r| r.omega),
        classifier_accuracy: col(|r| r.classifier_accuracy),
    }
}

/// Runs the full pipeline for one seed on pre-split data. Training and
/// calibration read only the two training splits; the test split is touched
/// exclusively by the final evaluation.
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    train_a: &TimeSeries,
    train_b: &TimeSeries,
    test: &TimeSeries,
) -> Result<SeedArtifacts> {
    let stage = |name: &'static str| move |e: Error| e.in_stage(name, seed);

    // Stage 1: fit the forecaster on split A.
    let forecaster = build_reesnn(cfg.k, cfg.hidden, seed).map_err(stage("build_forecaster"))?;
    let trained = train_reesnn(&forecaster, train_a, cfg.epochs_forecaster, cfg.lr_forecaster)
        .map_err(stage("train_forecaster"))?;
    let mse_train_reesnn = *trained.epoch_mse.last().expect("at least one epoch");

    // Stage 2: harvest errors on split B, pick δ, train the classifier and
    // calibrate ω there.
    let records_b =
        reesnn_forecast(&trained.model, train_b, cfg.k).map_err(stage("forecast_errors"))?;
    let errors_b: Vec<f64> = records_b.iter().map(|r| r.error).collect();
    let delta = select_delta(&errors_b, cfg.delta_mass).map_err(stage("select_delta"))?;
    let samples =
        build_classifier_dataset(&errors_b, cfg.d, delta).map_err(stage("build_dataset"))?;

    // Hold the trailing 20% out of classifier training as an accuracy probe.
    let holdout = samples.len() / 5;
    let train_samples = &samples[..samples.len() - holdout];
    let classifier = errclass::train_error_classifier_with_activation(
        train_samples,
        cfg.hc,
        cfg.epochs_classifier,
        cfg.lr_classifier,
        seed.wrapping_add(CLASSIFIER_SEED_SALT),
        cfg.classifier_hidden_activation.to_activation()?,
    )
    .map_err(stage("train_classifier"))?;

    let accuracy_slice: &[ClassifiedSample] = if holdout > 0 {
        &samples[samples.len() - holdout..]
    } else {
        &samples
    };
    let predicted_all =
        errclass::predict_sequence(&classifier, &samples).map_err(stage("classifier_accuracy"))?;
    let offset = samples.len() - accuracy_slice.len();
    let hits = predicted_all[offset..]
        .iter()
        .zip(accuracy_slice)
        .filter(|(p, s)| **p == s.label)
        .count();
    let classifier_accuracy = hits as f64 / accuracy_slice.len() as f64;

    // ω calibration against split B with candidates scaled by δ. The class
    // predictions reuse the same windows the correction pass will see.
    let mut context = classifier.zero_context();
    let mut cal_classes = Vec::new();
    let mut cal_raw = Vec::new();
    let mut cal_actual = Vec::new();
    for i in cfg.d..records_b.len() {
        let window: Vec<f64> = (1..=cfg.d).map(|j| records_b[i - j].error).collect();
        let (class, next) = errclass::predict_class(&classifier, &window, &context)
            .map_err(stage("calibrate_omega"))?;
        context = next;
        cal_classes.push(class);
        cal_raw.push(records_b[i].raw_forecast);
        cal_actual.push(records_b[i].actual);
    }
    let candidates: Vec<f64> = cfg.omega_candidates.iter().map(|m| m * delta).collect();
    let omega = calibrate_omega(&cal_raw, &cal_actual, &cal_classes, &candidates)
        .map_err(stage("calibrate_omega"))?;
    let classifier = classifier
        .with_delta(delta)
        .and_then(|c| c.with_omega(omega))
        .map_err(stage("calibrate_omega"))?;

    // Stage 3: evaluate raw and corrected forecasts on the test split.
    let records_c =
        reesnn_forecast(&trained.model, test, cfg.k).map_err(stage("forecast_test"))?;
    let test_records = correct_records(&records_c, &classifier, &CorrectionConfig::default())
        .map_err(stage("correct_test"))?;

    let actuals: Vec<f64> = test_records.iter().map(|r| r.actual).collect();
    let raw: Vec<f64> = test_records.iter().map(|r| r.raw_forecast).collect();
    let best: Vec<f64> = test_records.iter().map(|r| r.best_forecast()).collect();
    let mse_test_reesnn = nn::mse(&actuals, &raw).map_err(stage("evaluate"))?;
    let mse_test_toreesnn = nn::mse(&actuals, &best).map_err(stage("evaluate"))?;

    Ok(SeedArtifacts {
        record: SeedRecord {
            seed,
            mse_train_reesnn,
            mse_test_reesnn,
            mse_test_toreesnn,
            delta,
            omega,
            classifier_accuracy,
        },
        forecaster: trained.model,
        classifier,
        epoch_mse: trained.epoch_mse,
        test_records,
    })
}

/// Runs the configured experiment over every seed and aggregates the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let mut artifacts = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let raw = generate_benchmark(cfg, seed).map_err(|e| e.in_stage("generate", seed))?;
        let normalized = series::normalize(&raw).map_err(|e| e.in_stage("normalize", seed))?;
        let (a, b, c) = split_series(&normalized, cfg).map_err(|e| e.in_stage("split", seed))?;
        artifacts.push(run_seed(cfg, seed, &a, &b, &c)?);
    }
    let records: Vec<SeedRecord> = artifacts.iter().map(|a| a.record.clone()).collect();
    let report = ExperimentReport {
        benchmark: cfg.benchmark,
        median: aggregate(&records, median),
        min: aggregate(&records, |v| {
            v.iter().cloned().fold(f64::INFINITY, f64::min)
        }),
        records,
        reference: cfg.benchmark.reference(),
    };
    Ok(ExperimentRun {
        config: cfg.clone(),
        report,
        artifacts,
    })
}

/// One row of the reference comparison: achieved MSEs beside the published
/// value and their ratio. Informational only.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: &'static str,
    pub achieved_median: f64,
    pub achieved_min: f64,
    pub reference: f64,
    pub median_over_reference: f64,
}

/// Tabulates achieved against published MSEs for the report's benchmark.
pub fn compare_to_reference(report: &ExperimentReport) -> Result<Vec<ComparisonRow>> {
    if report.records.is_empty() {
        return Err(Error::invalid("report", "contains no seed records"));
    }
    let (ref_reesnn, ref_toreesnn) = report.reference;
    Ok(vec![
        ComparisonRow {
            method: "reesnn",
            achieved_median: report.median.mse_test_reesnn,
            achieved_min: report.min.mse_test_reesnn,
            reference: ref_reesnn,
            median_over_reference: report.median.mse_test_reesnn / ref_reesnn,
        },
        ComparisonRow {
            method: "toreesnn",
            achieved_median: report.median.mse_test_toreesnn,
            achieved_min: report.min.mse_test_toreesnn,
            reference: ref_toreesnn,
            median_over_reference: report.median.mse_test_toreesnn / ref_toreesnn,
        },
    ])
}

/// Machine-readable report: one row per seed plus `median` and `min` rows.
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "seed,mse_train_reesnn,mse_test_reesnn,mse_test_toreesnn,delta,omega,classifier_accuracy\n",
    );
    let fmt_row = |label: String, s: &SeedStats| {
        format!(
            "{label},{},{},{},{},{},{}\n",
            nn::format_f64(s.mse_train_reesnn),
            nn::format_f64(s.mse_test_reesnn),
            nn::format_f64(s.mse_test_toreesnn),
            nn::format_f64(s.delta),
            nn::format_f64(s.omega),
            nn::format_f64(s.classifier_accuracy),
        )
    };
    for r in &report.records {
        let stats = SeedStats {
            mse_train_reesnn: r.mse_train_reesnn,
            mse_test_reesnn: r.mse_test_reesnn,
            mse_test_toreesnn: r.mse_test_toreesnn,
            delta: r.delta,
            omega: r.omega,
            classifier_accuracy: r.classifier_accuracy,
        };
        out.push_str(&fmt_row(r.seed.to_string(), &stats));
    }
    out.push_str(&fmt_row("median".to_string(), &report.median));
    out.push_str(&fmt_row("min".to_string(), &report.min));
    out
}

/// Human-readable report table plus the reference comparison.
pub fn report_to_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("benchmark: {}\n\n", report.benchmark.name()));
    out.push_str(&format!(
        "{:>8}  {:>12}  {:>14}  {:>16}  {:>10}  {:>10}  {:>8}\n",
        "seed", "mse_train", "mse_test_raw", "mse_test_corr", "delta", "omega", "cls_acc"
    ));
    let line = |label: &str, s: &SeedStats| {
        format!(
            "{label:>8}  {:>12.4e}  {:>14.4e}  {:>16.4e}  {:>10.4e}  {:>10.4e}  {:>8.3}\n",
            s.mse_train_reesnn,
            s.mse_test_reesnn,
            s.mse_test_toreesnn,
            s.delta,
            s.omega,
            s.classifier_accuracy,
        )
    };
    for r in &report.records {
        let stats = SeedStats {
            mse_train_reesnn: r.mse_train_reesnn,
            mse_test_reesnn: r.mse_test_reesnn,
            mse_test_toreesnn: r.mse_test_toreesnn,
            delta: r.delta,
            omega: r.omega,
            classifier_accuracy: r.classifier_accuracy,
        };
        out.push_str(&line(&r.seed.to_string(), &stats));
    }
    out.push_str(&line("median", &report.median));
    out.push_str(&line("min", &report.min));

    out.push_str("\nreference comparison (published MSE test values, informational)\n");
    out.push_str(&format!(
        "{:>10}  {:>16}  {:>14}  {:>12}  {:>10}\n",
        "method", "achieved_median", "achieved_min", "reference", "ratio"
    ));
    if let Ok(rows) = compare_to_reference(report) {
        for row in rows {
            out.push_str(&format!(
                "{:>10}  {:>16.4e}  {:>14.4e}  {:>12.4e}  {:>10.3}\n",
                row.method,
                row.achieved_median,
                row.achieved_min,
                row.reference,
                row.median_over_reference,
            ));
        }
    }
    out
}

/// Writes `report.txt`, `report.csv`, and one `trace_<seed>.csv` per seed.
pub fn write_experiment_outputs(run: &ExperimentRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), report_to_text(&run.report))?;
    fs::write(dir.join("report.csv"), report_to_csv(&run.report))?;
    for artifact in &run.artifacts {
        fs::write(
            dir.join(format!("trace_{}.csv", artifact.record.seed)),
            records_to_csv(&artifact.test_records),
        )?;
    }
    Ok(())
}

/// Relative tolerance for the gradient oracle.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;
/// Central-difference step for the gradient oracle.
pub const GRADCHECK_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max relative deviation per network checked, forecaster shapes first.
    pub deviations: Vec<f64>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().cloned().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() < self.tolerance
    }
}

/// Checks analytic backprop against central finite differences on
/// `per_shape` random forecaster-shaped networks (2k → H → 1) and
/// `per_shape` random classifier-shaped networks (d+Hc → Hc → 3).
pub fn run_gradcheck_suite(per_shape: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmoid = Activation::sigmoid(1.0)?;
    let mut deviations = Vec::with_capacity(2 * per_shape);

    for _ in 0..per_shape {
        let k = rng.gen_range(1..=8usize);
        let hidden = rng.gen_range(1..=16usize);
        let net = Network::new(vec![
            DenseLayer::random(2 * k, hidden, sigmoid, &mut rng)?,
            DenseLayer::random(hidden, 1, sigmoid, &mut rng)?,
        ])?;
        let input: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = [rng.gen_range(0.05..0.95)];
        deviations.push(net.grad_check(&input, &target, GRADCHECK_STEP)?);
    }

    for _ in 0..per_shape {
        let d = rng.gen_range(1..=8usize);
        let hc = rng.gen_range(1..=16usize);
        let net = Network::new(vec![
            DenseLayer::random(d + hc, hc, sigmoid, &mut rng)?,
            DenseLayer::random(hc, 3, sigmoid, &mut rng)?,
        ])?;
        let mut input: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        input.extend((0..hc).map(|_| rng.gen_range(0.0..1.0)));
        let mut target = [0.0; 3];
        target[rng.gen_range(0..3usize)] = 1.0;
        deviations.push(net.grad_check(&input, &target, GRADCHECK_STEP)?);
    }

    Ok(GradCheckReport {
        deviations,
        tolerance: GRADCHECK_TOLERANCE,
    })
}
