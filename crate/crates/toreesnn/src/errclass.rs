//! Elman recurrent classifier over forecast errors: threshold the error into
//! {−1, 0, +1} classes, learn to predict the class of the next error from a
//! window of past errors, and convert a predicted class back into an
//! estimated error magnitude.
//!
//! The hidden layer sees the error window concatenated with a context vector
//! holding the previous hidden activations; the context is threaded
//! explicitly through prediction so models stay immutable values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{self, Activation, DenseLayer, Network, TrainState};

/// Default error-window width d.
pub const DEFAULT_WINDOW: usize = 5;
/// Default hidden width Hc.
pub const DEFAULT_HIDDEN: usize = 10;
/// Default training epochs.
pub const DEFAULT_EPOCHS: usize = 200;
/// Default learning rate.
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
/// δ floor for degenerate all-zero error sets.
pub const DELTA_FLOOR: f64 = 1e-6;

/// Three-branch threshold rule: −1 below −δ, 0 inside [−δ, δ], +1 above δ.
pub fn classify_error(e: f64, delta: f64) -> Result<i8> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok(if e < -delta {
        -1
    } else if e > delta {
        1
    } else {
        0
    })
}

/// Smallest δ covering at least `mass` of the absolute errors: the
/// mass-quantile of |errors|, floored at [`DELTA_FLOOR`] for degenerate
/// all-zero inputs.
pub fn select_delta(errors: &[f64], mass: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::invalid("errors", "must be non-empty"));
    }
    if mass.is_nan() || mass <= 0.0 || mass >= 1.0 {
        return Err(Error::invalid("mass", format!("must lie in (0, 1), got {mass}")));
    }
    let mut abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    if abs.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("errors", "non-finite entry"));
    }
    abs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let idx = ((mass * abs.len() as f64).ceil() as usize)
        .max(1)
        .min(abs.len())
        - 1;
    Ok(abs[idx].max(DELTA_FLOOR))
}

/// One classifier training sample: a window of d lagged errors (newest
/// first) and the class of the error that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedSample {
    pub window: Vec<f64>,
    pub label: i8,
}

/// Builds the classifier training set: for each t from d to the end, the
/// window [e(t−1), …, e(t−d)] is labeled with the class of e(t) — the error
/// that comes next after the window.
pub fn build_classifier_dataset(
    errors: &[f64],
    d: usize,
    delta: f64,
) -> Result<Vec<ClassifiedSample>> {
    if d < 1 {
        return Err(Error::invalid("d", "window must be at least 1"));
    }
    if errors.len() <= d {
        return Err(Error::invalid(
            "errors",
            format!("need more than d = {d} errors, got {}", errors.len()),
        ));
    }
    let mut samples = Vec::with_capacity(errors.len() - d);
    for t in d..errors.len() {
        let window: Vec<f64> = (1..=d).map(|i| errors[t - i]).collect();
        samples.push(ClassifiedSample {
            window,
            label: classify_error(errors[t], delta)?,
        });
    }
    Ok(samples)
}

/// IF-THEN conversion of a class into an estimated error: ±1 → ±ω, 0 → 0.
pub fn class_to_error(class: i8, omega: f64) -> Result<f64> {
    if !matches!(class, -1..=1) {
        return Err(Error::invalid("class", format!("must be -1, 0, or +1, got {class}")));
    }
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::invalid(
            "omega",
            format!("must be finite and non-negative, got {omega}"),
        ));
    }
    Ok(class as f64 * omega)
}

/// Picks the candidate ω minimizing the MSE of `raw + class·ω` against the
/// actuals; ties go to the smaller ω.
pub fn calibrate_omega(
    raw_forecasts: &[f64],
    actuals: &[f64],
    classes: &[i8],
    candidates: &[f64],
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "must be non-empty"));
    }
    if raw_forecasts.len() != actuals.len() || raw_forecasts.len() != classes.len() {
        return Err(Error::DimensionMismatch {
            context: "calibrate_omega",
            expected: raw_forecasts.len(),
            actual: actuals.len().min(classes.len()),
        });
    }
    if raw_forecasts.is_empty() {
        return Err(Error::invalid("raw_forecasts", "must be non-empty"));
    }
    let mut sorted = candidates.to_vec();
    if sorted.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("candidates", "entries must be finite and non-negative"));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let mut best = (f64::INFINITY, sorted[0]);
    for &omega in &sorted {
        let corrected: Vec<f64> = raw_forecasts
            .iter()
            .zip(classes)
            .map(|(&raw, &class)| raw + class as f64 * omega)
            .collect();
        let score = nn::mse(actuals, &corrected)?;
        if score < best.0 {
            best = (score, omega);
        }
    }
    Ok(best.1)
}

/// The Elman classifier: hidden layer over [window, context], three sigmoid
/// output units (unit 0 ↔ −1, unit 1 ↔ 0, unit 2 ↔ +1), plus the threshold
/// δ and correction magnitude ω it was tuned with.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorClassifierModel {
    d: usize,
    net: Network,
    delta: f64,
    omega: f64,
    seed: u64,
}

impl ErrorClassifierModel {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn hidden_width(&self) -> usize {
        self.net.layers()[0].out_dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// A fresh all-zero context vector.
    pub fn zero_context(&self) -> Vec<f64> {
        vec![0.0; self.hidden_width()]
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    /// ω may be zero: calibration picks 0 when corrections do not help.
    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::invalid(
                "omega",
                format!("must be finite and non-negative, got {omega}"),
            ));
        }
        self.omega = omega;
        Ok(self)
    }

    /// Wraps an existing network as a classifier. The network must map
    /// d + Hc inputs through one hidden layer of width Hc to three outputs.
    pub fn from_network(d: usize, net: Network, delta: f64, omega: f64, seed: u64) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("d", "window must be at least 1"));
        }
        let hc = net.layers()[0].out_dim();
        if net.layers().len() != 2 || net.out_dim() != 3 || net.in_dim() != d + hc {
            return Err(Error::invalid(
                "network",
                format!(
                    "expected shape {}→{hc}→3 in two layers, got {} layers {}→{}",
                    d + hc,
                    net.layers().len(),
                    net.in_dim(),
                    net.out_dim()
                ),
            ));
        }
        ErrorClassifierModel {
            d,
            net,
            delta: DELTA_FLOOR,
            omega: 0.0,
            seed,
        }
        .with_delta(delta)?
        .with_omega(omega)
    }

    /// Serializes as an `elman_classifier d Hc delta omega seed` header
    /// followed by the network body.
    pub fn save(&self) -> String {
        format!(
            "elman_classifier {} {} {} {} {}\n{}",
            self.d,
            self.hidden_width(),
            nn::format_f64(self.delta),
            nn::format_f64(self.omega),
            self.seed,
            nn::write_network(&self.net)
        )
    }

    pub fn load(text: &str) -> Result<Self> {
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| Error::Parse("missing classifier header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "elman_classifier" {
            return Err(Error::Parse(format!("bad classifier header `{header}`")));
        }
        let d: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse("bad d in header".into()))?;
        let hc: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse("bad Hc in header".into()))?;
        let delta: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Parse("bad delta in header".into()))?;
        let omega: f64 = fields[4]
            .parse()
            .map_err(|_| Error::Parse("bad omega in header".into()))?;
        let seed: u64 = fields[5]
            .parse()
            .map_err(|_| Error::Parse("bad seed in header".into()))?;
        let net = nn::parse_network(body)?;
        if net.layers().len() != 2
            || net.out_dim() != 3
            || net.layers()[0].out_dim() != hc
            || net.in_dim() != d + hc
        {
            return Err(Error::Parse("classifier body does not match header shape".into()));
        }
        Ok(ErrorClassifierModel {
            d,
            net,
            delta,
            omega,
            seed,
        })
    }

    /// Hidden activations and output-unit values for one window + context.
    fn step(&self, window: &[f64], context: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if window.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "classifier window",
                expected: self.d,
                actual: window.len(),
            });
        }
        if context.len() != self.hidden_width() {
            return Err(Error::DimensionMismatch {
                context: "classifier context",
                expected: self.hidden_width(),
                actual: context.len(),
            });
        }
        let mut input = Vec::with_capacity(self.d + context.len());
        input.extend_from_slice(window);
        input.extend_from_slice(context);
        let hidden = self.net.layers()[0].forward(&input)?;
        let output = self.net.layers()[1].forward(&hidden)?;
        Ok((hidden, output))
    }
}

/// Argmax over the three output units, mapped to {−1, 0, +1} with ties
/// broken toward 0, then −1.
pub(crate) fn argmax_class(outputs: &[f64]) -> i8 {
    let max = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Preference order on ties: unit 1 (class 0), unit 0 (class −1), unit 2.
    for (unit, class) in [(1usize, 0i8), (0, -1), (2, 1)] {
        if outputs[unit] == max {
            return class;
        }
    }
    unreachable!("outputs are finite");
}

fn one_hot(label: i8) -> Result<[f64; 3]> {
    match label {
        -1 => Ok([1.0, 0.0, 0.0]),
        0 => Ok([0.0, 1.0, 0.0]),
        1 => Ok([0.0, 0.0, 1.0]),
        other => Err(Error::invalid(
            "label",
            format!("must be -1, 0, or +1, got {other}"),
        )),
    }
}

/// Trains the Elman classifier on the dataset with sigmoid hidden units.
pub fn train_error_classifier(
    data: &[ClassifiedSample],
    hc: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<ErrorClassifierModel> {
    train_error_classifier_with_activation(
        data,
        hc,
        epochs,
        learning_rate,
        seed,
        Activation::sigmoid(1.0)?,
    )
}

/// Like [`train_error_classifier`] but with a configurable hidden
/// activation (the output layer is always sigmoid).
pub fn train_error_classifier_with_activation(
    data: &[ClassifiedSample],
    hc: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    hidden_activation: Activation,
) -> Result<ErrorClassifierModel> {
    if data.is_empty() {
        return Err(Error::invalid("data", "must be non-empty"));
    }
    if epochs < 1 {
        return Err(Error::invalid("epochs", "must train at least one epoch"));
    }
    if hc < 1 {
        return Err(Error::invalid("hc", "hidden width must be at least 1"));
    }
    let d = data[0].window.len();
    if d < 1 {
        return Err(Error::invalid("data", "windows must be non-empty"));
    }
    if data.iter().any(|s| s.window.len() != d) {
        return Err(Error::invalid("data", "windows must all share one width"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = DenseLayer::random(d + hc, hc, hidden_activation, &mut rng)?;
    let output = DenseLayer::random(hc, 3, Activation::sigmoid(1.0)?, &mut rng)?;
    let mut net = Network::new(vec![hidden, output])?;
    let mut state = TrainState::new(learning_rate)?;

    for epoch in 0..epochs {
        state.epoch = epoch;
        let mut context = vec![0.0; hc];
        for sample in data {
            let target = one_hot(sample.label)?;
            let mut input = Vec::with_capacity(d + hc);
            input.extend_from_slice(&sample.window);
            input.extend_from_slice(&context);

            // Context becomes this step's hidden activations, taken from the
            // pre-update weights that produced the prediction.
            let hidden_act = net.layers()[0].forward(&input)?;
            let grads = net.grads(&input, &target)?;
            net = net.apply_update(&grads, &state)?;
            context = hidden_act;
        }
    }

    Ok(ErrorClassifierModel {
        d,
        net,
        delta: DELTA_FLOOR,
        omega: 0.0,
        seed,
    })
}

/// Predicts the class of the next error from a window of past errors and the
/// running context; returns the class and the updated context.
pub fn predict_class(
    model: &ErrorClassifierModel,
    window: &[f64],
    context: &[f64],
) -> Result<(i8, Vec<f64>)> {
    let (hidden, output) = model.step(window, context)?;
    Ok((argmax_class(&output), hidden))
}

/// Runs prediction over a sample sequence in order, threading the context
/// from zeros; returns one predicted class per sample.
pub fn predict_sequence(
    model: &ErrorClassifierModel,
    samples: &[ClassifiedSample],
) -> Result<Vec<i8>> {
    let mut context = model.zero_context();
    let mut classes = Vec::with_capacity(samples.len());
    for sample in samples {
        let (class, next) = predict_class(model, &sample.window, &context)?;
        classes.push(class);
        context = next;
    }
    Ok(classes)
}

/// Fraction of samples whose predicted class matches the label.
pub fn classifier_accuracy(model: &ErrorClassifierModel, samples: &[ClassifiedSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "must be non-empty"));
    }
    let predicted = predict_sequence(model, samples)?;
    let hits = predicted
        .iter()
        .zip(samples)
        .filter(|(p, s)| **p == s.label)
        .count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Dataset CSV: `e_lag1,...,e_lagd,label`.
pub fn dataset_to_csv(samples: &[ClassifiedSample]) -> String {
    let d = samples.first().map(|s| s.window.len()).unwrap_or(0);
    let mut out = String::new();
    for i in 1..=d {
        out.push_str(&format!("e_lag{i},"));
    }
    out.push_str("label\n");
    for s in samples {
        for v in &s.window {
            out.push_str(&nn::format_f64(*v));
            out.push(',');
        }
        out.push_str(&format!("{}\n", s.label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classify_error_branches() {
        assert_eq!(classify_error(0.0, 0.05).unwrap(), 0);
        assert_eq!(classify_error(0.2, 0.05).unwrap(), 1);
        assert_eq!(classify_error(-0.2, 0.05).unwrap(), -1);
        // Boundaries are inclusive on the zero class.
        assert_eq!(classify_error(-0.05, 0.05).unwrap(), 0);
        assert_eq!(classify_error(0.05, 0.05).unwrap(), 0);
        assert!(classify_error(0.1, 0.0).is_err());
        assert!(classify_error(0.1, -0.01).is_err());
    }

    #[test]
    fn classify_error_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let e = rng.gen_range(-1.0..1.0);
            let delta = rng.gen_range(1e-4..0.5);
            assert_eq!(
                classify_error(-e, delta).unwrap(),
                -classify_error(e, delta).unwrap()
            );
        }
    }

    #[test]
    fn increasing_delta_never_leaves_the_zero_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let e = rng.gen_range(-1.0..1.0);
            let d1 = rng.gen_range(1e-4..0.5);
            let d2 = d1 + rng.gen_range(0.0..0.5);
            let c1 = classify_error(e, d1).unwrap();
            let c2 = classify_error(e, d2).unwrap();
            assert!(c2.abs() <= c1.abs(), "e={e} d1={d1} d2={d2}");
        }
    }

    #[test]
    fn select_delta_takes_the_mass_quantile() {
        let errors = [-0.2, -0.1, 0.0, 0.1, 0.2];
        assert_eq!(select_delta(&errors, 0.5).unwrap(), 0.1);
        let flipped: Vec<f64> = errors.iter().map(|e| -e).collect();
        assert_eq!(select_delta(&flipped, 0.5).unwrap(), 0.1);
    }

    #[test]
    fn select_delta_floors_degenerate_input() {
        assert_eq!(select_delta(&[0.0, 0.0, 0.0], 0.5).unwrap(), DELTA_FLOOR);
    }

    #[test]
    fn select_delta_rejects_bad_arguments() {
        assert!(select_delta(&[], 0.5).is_err());
        assert!(select_delta(&[0.1], 0.0).is_err());
        assert!(select_delta(&[0.1], 1.0).is_err());
    }

    #[test]
    fn dataset_windows_and_labels_hand_enumerated() {
        // errors: e(0..5); d = 2, delta = 0.05.
        let errors = [0.10, -0.20, 0.01, 0.30, -0.02, -0.40];
        let samples = build_classifier_dataset(&errors, 2, 0.05).unwrap();
        assert_eq!(samples.len(), 4);
        // t = 2: window [e(1), e(0)], label C(e(2)) = 0.
        assert_eq!(samples[0].window, vec![-0.20, 0.10]);
        assert_eq!(samples[0].label, 0);
        // t = 3: window [e(2), e(1)], label C(0.30) = +1.
        assert_eq!(samples[1].window, vec![0.01, -0.20]);
        assert_eq!(samples[1].label, 1);
        // t = 4: label C(-0.02) = 0; t = 5: label C(-0.40) = -1.
        assert_eq!(samples[2].label, 0);
        assert_eq!(samples[3].window, vec![-0.02, 0.30]);
        assert_eq!(samples[3].label, -1);
    }

    #[test]
    fn dataset_size_is_len_minus_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let len = rng.gen_range(4..64usize);
            let d = rng.gen_range(1..len);
            let errors: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let samples = build_classifier_dataset(&errors, d, 0.1).unwrap();
            assert_eq!(samples.len(), len - d);
        }
    }

    #[test]
    fn dataset_all_small_errors_label_zero() {
        let errors = [0.01, -0.02, 0.03, -0.01, 0.02];
        let samples = build_classifier_dataset(&errors, 2, 0.05).unwrap();
        assert!(samples.iter().all(|s| s.label == 0));
        assert!(build_classifier_dataset(&errors, 5, 0.05).is_err());
        assert_eq!(build_classifier_dataset(&errors, 4, 0.05).unwrap().len(), 1);
    }

    #[test]
    fn class_to_error_rules() {
        assert_eq!(class_to_error(1, 0.03).unwrap(), 0.03);
        assert_eq!(class_to_error(0, 0.5).unwrap(), 0.0);
        assert_eq!(class_to_error(-1, 0.03).unwrap(), -0.03);
        assert!(class_to_error(2, 0.03).is_err());
        assert!(class_to_error(1, -0.1).is_err());
    }

    #[test]
    fn zero_class_composition_maps_small_errors_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let delta = rng.gen_range(1e-4..0.5);
            let e = rng.gen_range(-delta..=delta);
            let class = classify_error(e, delta).unwrap();
            assert_eq!(class_to_error(class, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn calibrate_omega_prefers_smallest_on_ties() {
        let raw = [0.5, 0.4, 0.6];
        let actual = [0.5, 0.4, 0.6];
        let classes = [0, 0, 0];
        let omega = calibrate_omega(&raw, &actual, &classes, &[0.06, 0.02, 0.04]).unwrap();
        assert_eq!(omega, 0.02);
        let single = calibrate_omega(&raw, &actual, &classes, &[0.37]).unwrap();
        assert_eq!(single, 0.37);
    }

    #[test]
    fn calibrate_omega_recovers_planted_magnitude() {
        // Errors of constant magnitude 0.04 with classes equal to the true
        // sign: omega = 0.04 cancels them exactly.
        let actual = [0.50, 0.60, 0.40, 0.55, 0.45];
        let signs = [1i8, -1, 1, -1, 1];
        let raw: Vec<f64> = actual
            .iter()
            .zip(&signs)
            .map(|(&a, &s)| a - s as f64 * 0.04)
            .collect();
        let omega = calibrate_omega(&raw, &actual, &signs, &[0.02, 0.04, 0.06]).unwrap();
        assert_eq!(omega, 0.04);
    }

    #[test]
    fn calibrate_omega_with_zero_candidate_never_regresses() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(3..30usize);
            let actual: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let classes: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1) as i8).collect();
            let candidates = [0.0, rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2)];
            let omega = calibrate_omega(&raw, &actual, &classes, &candidates).unwrap();
            let corrected: Vec<f64> = raw
                .iter()
                .zip(&classes)
                .map(|(&r, &c)| r + c as f64 * omega)
                .collect();
            let corrected_mse = nn::mse(&actual, &corrected).unwrap();
            let raw_mse = nn::mse(&actual, &raw).unwrap();
            assert!(corrected_mse <= raw_mse + 1e-15);
        }
    }

    #[test]
    fn calibrate_omega_rejects_bad_input() {
        assert!(calibrate_omega(&[0.5], &[0.5], &[0], &[]).is_err());
        assert!(calibrate_omega(&[0.5], &[0.5, 0.4], &[0], &[0.1]).is_err());
        assert!(calibrate_omega(&[0.5], &[0.5], &[0], &[-0.1]).is_err());
    }

    #[test]
    fn argmax_maps_units_to_classes_with_tie_breaks() {
        assert_eq!(argmax_class(&[0.9, 0.1, 0.1]), -1);
        assert_eq!(argmax_class(&[0.1, 0.9, 0.1]), 0);
        assert_eq!(argmax_class(&[0.1, 0.1, 0.9]), 1);
        // Ties go to class 0 first, then -1.
        assert_eq!(argmax_class(&[0.3, 0.3, 0.3]), 0);
        assert_eq!(argmax_class(&[0.5, 0.2, 0.5]), -1);
    }

    fn separable_dataset(n: usize, d: usize, seed: u64) -> Vec<ClassifiedSample> {
        // Window mean decides the label; class means sit 0.4 apart, well
        // beyond a 3δ margin for δ = 0.1.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = [(-1i8), 0, 1][i % 3];
                let center = 0.4 * label as f64;
                let spread = if label == 0 { 0.02 } else { 0.05 };
                let window: Vec<f64> = (0..d)
                    .map(|_| center + rng.gen_range(-spread..spread))
                    .collect();
                ClassifiedSample { window, label }
            })
            .collect()
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let data = separable_dataset(60, 5, 1);
        let a = train_error_classifier(&data, 10, 20, 0.1, 9).unwrap();
        let b = train_error_classifier(&data, 10, 20, 0.1, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let data = separable_dataset(30, 4, 2);
        let trained = train_error_classifier(&data, 6, 10, 0.0, 5).unwrap();
        let fresh = train_error_classifier(&data, 6, 1, 0.0, 5).unwrap();
        assert_eq!(trained.network(), fresh.network());
    }

    #[test]
    fn training_rejects_bad_input() {
        assert!(train_error_classifier(&[], 10, 10, 0.1, 1).is_err());
        let data = separable_dataset(10, 3, 1);
        assert!(train_error_classifier(&data, 10, 0, 0.1, 1).is_err());
    }

    #[test]
    fn learns_a_separable_synthetic_dataset() {
        let data = separable_dataset(150, 5, 3);
        let model = train_error_classifier(&data, 10, 200, 0.1, 7).unwrap();
        let acc = classifier_accuracy(&model, &data).unwrap();
        assert!(acc >= 0.9, "training accuracy {acc}");
    }

    #[test]
    fn hyperbolic_hidden_units_also_learn() {
        let data = separable_dataset(150, 5, 3);
        let model = train_error_classifier_with_activation(
            &data,
            10,
            200,
            0.1,
            7,
            Activation::hyperbolic(),
        )
        .unwrap();
        let acc = classifier_accuracy(&model, &data).unwrap();
        assert!(acc >= 0.9, "training accuracy {acc}");
        // Save/load keeps the hidden activation.
        let reloaded = ErrorClassifierModel::load(&model.save()).unwrap();
        assert_eq!(reloaded, model);
    }

    #[test]
    fn context_changes_the_prediction_surface() {
        // Same window, two distinct contexts: both the hidden state and the
        // output units must move through the nonzero context weights.
        let data = separable_dataset(150, 5, 4);
        let model = train_error_classifier(&data, 10, 50, 0.1, 8).unwrap();
        let window = vec![0.05; 5];
        let zero_ctx = model.zero_context();
        let other_ctx = vec![0.9; model.hidden_width()];
        let (h_zero, out_zero) = model.step(&window, &zero_ctx).unwrap();
        let (h_other, out_other) = model.step(&window, &other_ctx).unwrap();
        assert_ne!(h_zero, h_other);
        assert_ne!(out_zero, out_other);
    }

    #[test]
    fn repeated_sequence_prediction_is_identical() {
        let data = separable_dataset(80, 5, 5);
        let model = train_error_classifier(&data, 10, 30, 0.1, 11).unwrap();
        let a = predict_sequence(&model, &data).unwrap();
        let b = predict_sequence(&model, &data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn save_load_round_trips() {
        let data = separable_dataset(60, 5, 6);
        let model = train_error_classifier(&data, 8, 20, 0.1, 13)
            .unwrap()
            .with_delta(0.07)
            .unwrap()
            .with_omega(0.035)
            .unwrap();
        let text = model.save();
        let loaded = ErrorClassifierModel::load(&text).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(loaded.save(), text);
    }

    #[test]
    fn dataset_csv_layout() {
        let samples = vec![ClassifiedSample {
            window: vec![0.1, -0.2],
            label: -1,
        }];
        let csv = dataset_to_csv(&samples);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("e_lag1,e_lag2,label"));
        let row = lines.next().unwrap();
        assert!(row.ends_with(",-1"));
    }
}
