//! The recursive extended exponential smoothed forecaster: a Jordan-style
//! network whose inputs are the k most recent self-forecasts and the k most
//! recent forecast errors, trained one-step-ahead by online backpropagation.
//!
//! The recursion is realized by constructing each input vector from the
//! model's own previous outputs; gradients do not flow through the history
//! (no backpropagation through time).

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{self, Activation, DenseLayer, Network, TrainState};
use crate::series::TimeSeries;

/// Default lag order.
pub const DEFAULT_K: usize = 5;
/// Default hidden width.
pub const DEFAULT_HIDDEN: usize = 10;
/// Default training epochs.
pub const DEFAULT_EPOCHS: usize = 200;
/// Default learning rate.
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

/// One forecasted step. `error_class`, `estimated_error`, and
/// `corrected_forecast` stay empty until the correction stage fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    /// Index of the forecasted sample within its series.
    pub t: usize,
    pub actual: f64,
    pub raw_forecast: f64,
    /// actual − raw_forecast, exactly.
    pub error: f64,
    pub error_class: Option<i8>,
    pub estimated_error: Option<f64>,
    pub corrected_forecast: Option<f64>,
}

impl ForecastRecord {
    pub fn new(t: usize, actual: f64, raw_forecast: f64) -> Self {
        ForecastRecord {
            t,
            actual,
            raw_forecast,
            error: actual - raw_forecast,
            error_class: None,
            estimated_error: None,
            corrected_forecast: None,
        }
    }

    /// The forecast the record stands behind: corrected when present,
    /// otherwise raw.
    pub fn best_forecast(&self) -> f64 {
        self.corrected_forecast.unwrap_or(self.raw_forecast)
    }
}

/// The two-layer sigmoid forecaster with lag order k.
#[derive(Debug, Clone, PartialEq)]
pub struct ReesnnModel {
    k: usize,
    net: Network,
    seed: u64,
}

impl ReesnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hidden_width(&self) -> usize {
        self.net.layers()[0].out_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Wraps an existing network as a forecaster. The network must map 2k
    /// inputs through one hidden layer to a single output.
    pub fn from_network(k: usize, net: Network, seed: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::invalid("k", "lag order must be at least 1"));
        }
        if net.layers().len() != 2 || net.in_dim() != 2 * k || net.out_dim() != 1 {
            return Err(Error::invalid(
                "network",
                format!(
                    "expected shape {}→H→1 in two layers, got {} layers {}→{}",
                    2 * k,
                    net.layers().len(),
                    net.in_dim(),
                    net.out_dim()
                ),
            ));
        }
        Ok(ReesnnModel { k, net, seed })
    }

    /// One forecast from an explicit 2k input vector, strictly inside (0, 1).
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        Ok(self.net.forward(input)?[0])
    }

    /// Serializes as a `reesnn k H seed` header followed by the network body.
    pub fn save(&self) -> String {
        format!(
            "reesnn {} {} {}\n{}",
            self.k,
            self.hidden_width(),
            self.seed,
            nn::write_network(&self.net)
        )
    }

    pub fn load(text: &str) -> Result<Self> {
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| Error::Parse("missing forecaster header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "reesnn" {
            return Err(Error::Parse(format!("bad forecaster header `{header}`")));
        }
        let k: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse("bad k in header".into()))?;
        let hidden: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse("bad hidden width in header".into()))?;
        let seed: u64 = fields[3]
            .parse()
            .map_err(|_| Error::Parse("bad seed in header".into()))?;
        let net = nn::parse_network(body)?;
        let model = Self::from_network(k, net, seed)?;
        if model.hidden_width() != hidden {
            return Err(Error::Parse(format!(
                "header declares hidden width {hidden} but body has {}",
                model.hidden_width()
            )));
        }
        Ok(model)
    }
}

/// Builds a forecaster with seeded-random weights: hidden layer first, then
/// output layer, both sigmoid with gain 1.
pub fn build_reesnn(k: usize, hidden: usize, seed: u64) -> Result<ReesnnModel> {
    if k < 1 {
        return Err(Error::invalid("k", "lag order must be at least 1"));
    }
    if hidden < 1 {
        return Err(Error::invalid("hidden", "hidden width must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmoid = Activation::sigmoid(1.0)?;
    let hidden_layer = DenseLayer::random(2 * k, hidden, sigmoid, &mut rng)?;
    let output_layer = DenseLayer::random(hidden, 1, sigmoid, &mut rng)?;
    Ok(ReesnnModel {
        k,
        net: Network::new(vec![hidden_layer, output_layer])?,
        seed,
    })
}

/// Concatenates the forecast and error histories, both newest-first and of
/// length k, into the 2k network input.
pub fn reesnn_input(y_hist: &[f64], e_hist: &[f64]) -> Result<Vec<f64>> {
    if y_hist.len() != e_hist.len() {
        return Err(Error::DimensionMismatch {
            context: "reesnn histories",
            expected: y_hist.len(),
            actual: e_hist.len(),
        });
    }
    if y_hist.iter().chain(e_hist.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("history", "non-finite entry"));
    }
    let mut input = Vec::with_capacity(2 * y_hist.len());
    input.extend_from_slice(y_hist);
    input.extend_from_slice(e_hist);
    Ok(input)
}

/// Sliding histories for the recursive input construction, newest first.
struct Histories {
    forecasts: VecDeque<f64>,
    errors: VecDeque<f64>,
}

impl Histories {
    /// Seeds the forecast history with the actuals just before `start`
    /// (newest first) and the error history with zeros.
    fn seeded(series: &[f64], start: usize, k: usize) -> Self {
        let forecasts = (1..=k).map(|i| series[start - i]).collect();
        Histories {
            forecasts,
            errors: VecDeque::from(vec![0.0; k]),
        }
    }

    fn input(&self) -> Result<Vec<f64>> {
        let y: Vec<f64> = self.forecasts.iter().copied().collect();
        let e: Vec<f64> = self.errors.iter().copied().collect();
        reesnn_input(&y, &e)
    }

    fn push(&mut self, forecast: f64, error: f64) {
        self.forecasts.push_front(forecast);
        self.forecasts.pop_back();
        self.errors.push_front(error);
        self.errors.pop_back();
    }
}

fn require_normalized(series: &TimeSeries) -> Result<()> {
    if !series.is_normalized() {
        return Err(Error::invalid(
            "series",
            "forecaster operates on normalized series only",
        ));
    }
    Ok(())
}

/// Result of a training run: the trained model, the final epoch's forecast
/// records, and the mean squared training error per epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ReesnnModel,
    pub records: Vec<ForecastRecord>,
    pub epoch_mse: Vec<f64>,
}

/// Trains one-step-ahead over the series. Each epoch sweeps in temporal
/// order with histories re-seeded from the first k actuals; inputs are the
/// model's own previous forecasts plus observed errors; the weight update is
/// applied per sample.
pub fn train_reesnn(
    model: &ReesnnModel,
    series: &TimeSeries,
    epochs: usize,
    learning_rate: f64,
) -> Result<TrainOutcome> {
    require_normalized(series)?;
    if epochs < 1 {
        return Err(Error::invalid("epochs", "must train at least one epoch"));
    }
    let k = model.k;
    let x = series.values();
    if x.len() < k + 2 {
        return Err(Error::invalid(
            "series",
            format!("need more than k+1 = {} samples, got {}", k + 1, x.len()),
        ));
    }

    let mut state = TrainState::new(learning_rate)?;
    let mut net = model.net.clone();
    let mut epoch_mse = Vec::with_capacity(epochs);
    let mut records = Vec::new();

    for epoch in 0..epochs {
        state.epoch = epoch;
        let mut hist = Histories::seeded(x, k, k);
        let mut sq_sum = 0.0;
        records.clear();

        for t in k - 1..x.len() - 1 {
            let input = hist.input()?;
            let forecast = net.forward(&input)?[0];
            let target = x[t + 1];

            let grads = net.grads(&input, &[target])?;
            net = net.apply_update(&grads, &state)?;

            let record = ForecastRecord::new(t + 1, target, forecast);
            sq_sum += record.error * record.error;
            hist.push(forecast, record.error);
            records.push(record);
        }

        let epoch_loss = sq_sum / records.len() as f64;
        state.last_loss = epoch_loss;
        epoch_mse.push(epoch_loss);
    }

    Ok(TrainOutcome {
        model: ReesnnModel {
            k,
            net,
            seed: model.seed,
        },
        records,
        epoch_mse,
    })
}

/// One-step-ahead evaluation with frozen weights. The forecast history is
/// seeded with the first `warmup` actuals (so the first forecast targets
/// index `warmup`), the error history with zeros.
pub fn reesnn_forecast(
    model: &ReesnnModel,
    series: &TimeSeries,
    warmup: usize,
) -> Result<Vec<ForecastRecord>> {
    require_normalized(series)?;
    let k = model.k;
    if warmup < k {
        return Err(Error::invalid(
            "warmup",
            format!("must be at least k = {k}, got {warmup}"),
        ));
    }
    let x = series.values();
    if x.len() < warmup + 1 {
        return Err(Error::invalid(
            "series",
            format!("need at least warmup+1 = {} samples, got {}", warmup + 1, x.len()),
        ));
    }

    let mut hist = Histories::seeded(x, warmup, k);
    let mut records = Vec::with_capacity(x.len() - warmup);
    for (t, &actual) in x.iter().enumerate().skip(warmup) {
        let input = hist.input()?;
        let forecast = model.net.forward(&input)?[0];
        let record = ForecastRecord::new(t, actual, forecast);
        hist.push(forecast, record.error);
        records.push(record);
    }
    Ok(records)
}

fn optional_f64(v: Option<f64>) -> String {
    v.map(nn::format_f64).unwrap_or_default()
}

/// Forecast-record CSV with empty fields for absent values:
/// `t,actual,raw_forecast,error,error_class,estimated_error,corrected_forecast`.
pub fn records_to_csv(records: &[ForecastRecord]) -> String {
    let mut out =
        String::from("t,actual,raw_forecast,error,error_class,estimated_error,corrected_forecast\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            nn::format_f64(r.actual),
            nn::format_f64(r.raw_forecast),
            nn::format_f64(r.error),
            r.error_class.map(|c| c.to_string()).unwrap_or_default(),
            optional_f64(r.estimated_error),
            optional_f64(r.corrected_forecast),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{self, gen_mackey_glass, MgParams, SeriesOrigin};

    fn normalized_mg(n: usize) -> TimeSeries {
        let p = MgParams::default();
        let raw = gen_mackey_glass(&p, n, &p.default_history()).unwrap();
        series::normalize(&raw).unwrap()
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let a = build_reesnn(5, 10, 42).unwrap();
        let b = build_reesnn(5, 10, 42).unwrap();
        assert_eq!(a, b);
        let c = build_reesnn(5, 10, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn build_shapes_follow_lag_order() {
        let m = build_reesnn(5, 10, 1).unwrap();
        assert_eq!(m.network().layers()[0].in_dim(), 10);
        assert_eq!(m.network().layers()[0].out_dim(), 10);
        assert_eq!(m.network().layers()[1].in_dim(), 10);
        assert_eq!(m.network().layers()[1].out_dim(), 1);
    }

    #[test]
    fn build_rejects_degenerate_sizes() {
        assert!(build_reesnn(0, 10, 1).is_err());
        assert!(build_reesnn(5, 0, 1).is_err());
    }

    #[test]
    fn input_concatenation_order() {
        let input = reesnn_input(&[0.5, 0.4], &[0.1, -0.1]).unwrap();
        assert_eq!(input, vec![0.5, 0.4, 0.1, -0.1]);
        assert_eq!(reesnn_input(&[0.0], &[0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(reesnn_input(&[0.5], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn forward_zero_weights_is_half() {
        let sigmoid = Activation::sigmoid(1.0).unwrap();
        let net = Network::new(vec![
            DenseLayer::zeros(4, 3, sigmoid).unwrap(),
            DenseLayer::zeros(3, 1, sigmoid).unwrap(),
        ])
        .unwrap();
        let m = ReesnnModel::from_network(2, net, 0).unwrap();
        assert_eq!(m.forward(&[0.9, -3.0, 0.2, 7.0]).unwrap(), 0.5);
    }

    #[test]
    fn forward_tiny_model_hand_computed() {
        // k = 1, H = 1, all weights 1, biases 0, input [0.5, 0.1]:
        // output = sigmoid(sigmoid(0.6)).
        let sigmoid = Activation::sigmoid(1.0).unwrap();
        let net = Network::new(vec![
            DenseLayer::from_parts(2, 1, vec![1.0, 1.0], vec![0.0], sigmoid).unwrap(),
            DenseLayer::from_parts(1, 1, vec![1.0], vec![0.0], sigmoid).unwrap(),
        ])
        .unwrap();
        let m = ReesnnModel::from_network(1, net, 0).unwrap();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let expected = sig(sig(0.6));
        assert!((m.forward(&[0.5, 0.1]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn forward_stays_in_open_unit_interval() {
        let m = build_reesnn(3, 8, 9).unwrap();
        for input in [[1.0; 6], [-50.0; 6], [50.0; 6]] {
            let y = m.forward(&input).unwrap();
            assert!(y > 0.0 && y < 1.0);
        }
    }

    #[test]
    fn train_rejects_bad_arguments() {
        let m = build_reesnn(2, 4, 1).unwrap();
        let s = normalized_mg(50);
        assert!(train_reesnn(&m, &s, 0, 0.1).is_err());
        let raw = gen_mackey_glass(&MgParams::default(), 50, &MgParams::default().default_history())
            .unwrap();
        assert!(train_reesnn(&m, &raw, 1, 0.1).is_err());
        let short = normalized_mg(50).slice(0, 3).unwrap();
        assert!(train_reesnn(&m, &short, 1, 0.1).is_err());
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let m = build_reesnn(3, 6, 5).unwrap();
        let s = normalized_mg(100);
        let out = train_reesnn(&m, &s, 3, 0.0).unwrap();
        assert_eq!(out.model, m);
    }

    #[test]
    fn training_reduces_loss_on_mackey_glass() {
        let m = build_reesnn(5, 10, 1).unwrap();
        let s = normalized_mg(500);
        let out = train_reesnn(&m, &s, 200, 0.1).unwrap();
        assert!(
            out.epoch_mse.last().unwrap() < out.epoch_mse.first().unwrap(),
            "first {} vs last {}",
            out.epoch_mse[0],
            out.epoch_mse.last().unwrap()
        );
    }

    #[test]
    fn training_loss_trend_has_no_divergence() {
        // Epoch-mean loss at E stays within 1.1x of the loss ten epochs back.
        let m = build_reesnn(5, 10, 2).unwrap();
        let s = normalized_mg(300);
        let out = train_reesnn(&m, &s, 60, 0.1).unwrap();
        for e in 20..out.epoch_mse.len() {
            assert!(
                out.epoch_mse[e] <= 1.1 * out.epoch_mse[e - 10],
                "loss rose at epoch {e}: {} vs {}",
                out.epoch_mse[e],
                out.epoch_mse[e - 10]
            );
        }
    }

    #[test]
    fn forecast_records_satisfy_definitions() {
        let m = build_reesnn(4, 8, 3).unwrap();
        let s = normalized_mg(120);
        let records = reesnn_forecast(&m, &s, 10).unwrap();
        assert_eq!(records.len(), 110);
        assert_eq!(records[0].t, 10);
        for r in &records {
            assert!(r.raw_forecast > 0.0 && r.raw_forecast < 1.0);
            assert_eq!(r.error, r.actual - r.raw_forecast);
            assert!(r.error_class.is_none());
        }
    }

    #[test]
    fn forecast_is_deterministic_for_frozen_model() {
        let m = build_reesnn(4, 8, 3).unwrap();
        let s = normalized_mg(120);
        let a = reesnn_forecast(&m, &s, 10).unwrap();
        let b = reesnn_forecast(&m, &s, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forecast_rejects_short_series_and_small_warmup() {
        let m = build_reesnn(4, 8, 3).unwrap();
        let s = normalized_mg(120);
        assert!(reesnn_forecast(&m, &s, 3).is_err());
        let short = s.slice(0, 10).unwrap();
        assert!(reesnn_forecast(&m, &short, 10).is_err());
    }

    #[test]
    fn perturbed_actual_reaches_next_input_only_through_errors() {
        // Changing x(t0) must leave the next step's forecast-history entries
        // (the model's own outputs) unchanged; only the error channel moves.
        let m = build_reesnn(3, 6, 7).unwrap();
        let s = normalized_mg(80);
        let t0 = 40;

        let mut perturbed_values = s.values().to_vec();
        perturbed_values[t0] = (perturbed_values[t0] + 0.05).min(0.999);
        // The series still spans [0, 1] elsewhere, so re-normalizing is the
        // bitwise identity and only x(t0) differs between the two runs.
        assert!(perturbed_values.contains(&0.0));
        assert!(perturbed_values.contains(&1.0));
        let base = TimeSeries::new(perturbed_values.clone(), s.dt(), SeriesOrigin::External)
            .unwrap();
        let perturbed = series::normalize(&base).unwrap();
        let original = series::normalize(
            &TimeSeries::new(s.values().to_vec(), s.dt(), SeriesOrigin::External).unwrap(),
        )
        .unwrap();

        let ra = reesnn_forecast(&m, &original, 10).unwrap();
        let rb = reesnn_forecast(&m, &perturbed, 10).unwrap();

        // Forecasts made before x(t0) was seen are identical, including the
        // forecast FOR t0 itself.
        for (a, b) in ra.iter().zip(&rb).take_while(|(a, _)| a.t <= t0) {
            assert_eq!(a.raw_forecast, b.raw_forecast);
        }
        // The y-history entries feeding the forecast of t0+1 are those same
        // unchanged outputs; the error at t0 is what differs.
        let idx = ra.iter().position(|r| r.t == t0).unwrap();
        assert_ne!(ra[idx].error, rb[idx].error);
        assert_ne!(ra[idx + 1].raw_forecast, rb[idx + 1].raw_forecast);
    }

    #[test]
    fn gradients_of_composed_forecaster_match_oracle() {
        let m = build_reesnn(5, 10, 11).unwrap();
        let input: Vec<f64> = (0..10).map(|i| 0.05 * i as f64 - 0.2).collect();
        let dev = m.network().grad_check(&input, &[0.7], 1e-5).unwrap();
        assert!(dev < 1e-5, "deviation {dev}");
    }

    #[test]
    fn save_load_round_trips() {
        let m = build_reesnn(5, 10, 42).unwrap();
        let text = m.save();
        let loaded = ReesnnModel::load(&text).unwrap();
        assert_eq!(loaded, m);
        assert_eq!(loaded.save(), text);
    }

    #[test]
    fn records_csv_has_empty_fields_for_absent_values() {
        let mut r = ForecastRecord::new(3, 0.5, 0.4);
        let csv = records_to_csv(std::slice::from_ref(&r));
        let line = csv.lines().nth(1).unwrap();
        assert!(line.ends_with(",,,"));
        r.error_class = Some(1);
        r.estimated_error = Some(0.02);
        r.corrected_forecast = Some(0.42);
        let csv = records_to_csv(&[r]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.contains(",1,"));
        assert!(!line.ends_with(','));
    }
}
