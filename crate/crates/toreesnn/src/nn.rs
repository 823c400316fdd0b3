//! Shared neural primitives: activations, dense layers, half-SSE loss,
//! backpropagation, plain gradient-descent updates, and a finite-difference
//! gradient oracle.
//!
//! Networks here are small (tens of units), fully connected, and trained
//! online one sample at a time, so everything is plain `Vec<f64>` with
//! row-major weight matrices. All operations are pure: training produces a
//! new network value rather than mutating in place.

use rand::Rng;

use crate::error::{Error, Result};

/// The activation functions the forecaster and classifier can use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Linear,
    Hyperbolic,
    Sin,
    Cos,
    Sigmoid,
}

/// An activation function. `gain` is the sigmoid steepness and is ignored
/// by the other kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub gain: f64,
}

impl Activation {
    pub fn linear() -> Self {
        Activation {
            kind: ActivationKind::Linear,
            gain: 1.0,
        }
    }

    pub fn hyperbolic() -> Self {
        Activation {
            kind: ActivationKind::Hyperbolic,
            gain: 1.0,
        }
    }

    pub fn sin() -> Self {
        Activation {
            kind: ActivationKind::Sin,
            gain: 1.0,
        }
    }

    pub fn cos() -> Self {
        Activation {
            kind: ActivationKind::Cos,
            gain: 1.0,
        }
    }

    /// Sigmoid with gain `c`: F(x) = 1 / (1 + exp(-c x)). Requires c > 0.
    pub fn sigmoid(gain: f64) -> Result<Self> {
        if !gain.is_finite() || gain <= 0.0 {
            return Err(Error::invalid("gain", format!("must be positive, got {gain}")));
        }
        Ok(Activation {
            kind: ActivationKind::Sigmoid,
            gain,
        })
    }

    /// F(x).
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            ActivationKind::Linear => x,
            ActivationKind::Hyperbolic => x.tanh(),
            ActivationKind::Sin => x.sin(),
            ActivationKind::Cos => x.cos(),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-self.gain * x).exp()),
        }
    }

    /// dF/dx evaluated at x.
    pub fn deriv(&self, x: f64) -> f64 {
        match self.kind {
            ActivationKind::Linear => 1.0,
            ActivationKind::Hyperbolic => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Sin => x.cos(),
            ActivationKind::Cos => -x.sin(),
            ActivationKind::Sigmoid => {
                let s = self.eval(x);
                self.gain * s * (1.0 - s)
            }
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            ActivationKind::Linear => "linear",
            ActivationKind::Hyperbolic => "hyperbolic",
            ActivationKind::Sin => "sin",
            ActivationKind::Cos => "cos",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }
}

/// A fully connected layer: out = F(W·in + b), W stored row-major (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    /// All-zero weights and biases.
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::invalid("layer size", "dimensions must be nonzero"));
        }
        Ok(DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        })
    }

    /// Weights and biases drawn uniformly from [-0.5, 0.5]. Draw order is
    /// weights row-major, then biases, so a given RNG state always yields
    /// the same layer.
    pub fn random<R: Rng>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layer = Self::zeros(in_dim, out_dim, activation)?;
        for w in layer.weights.iter_mut() {
            *w = rng.gen_range(-0.5..=0.5);
        }
        for b in layer.bias.iter_mut() {
            *b = rng.gen_range(-0.5..=0.5);
        }
        Ok(layer)
    }

    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                context: "layer weights",
                expected: in_dim * out_dim,
                actual: weights.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(Error::DimensionMismatch {
                context: "layer bias",
                expected: out_dim,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("layer weights", "non-finite entry"));
        }
        Ok(DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn set_weight(&mut self, row: usize, col: usize, value: f64) {
        self.weights[row * self.in_dim + col] = value;
    }

    pub fn set_bias(&mut self, row: usize, value: f64) {
        self.bias[row] = value;
    }

    /// Pre-activations z = W·in + b.
    fn preactivate(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "layer input",
                expected: self.in_dim,
                actual: input.len(),
            });
        }
        let mut z = self.bias.clone();
        for (row, zi) in z.iter_mut().enumerate() {
            let w_row = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            for (w, x) in w_row.iter().zip(input) {
                *zi += w * x;
            }
        }
        Ok(z)
    }

    /// F(W·in + b).
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let z = self.preactivate(input)?;
        Ok(z.iter().map(|&zi| self.activation.eval(zi)).collect())
    }
}

/// A stack of dense layers applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

/// (pre-activations, activations) per layer from a traced forward pass.
type ForwardTrace = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Gradients of the half-SSE loss with the same shape as a network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    /// True if every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|&g| g == 0.0))
    }
}

/// Hyperparameters threaded through a training run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub learning_rate: f64,
    pub epoch: usize,
    pub last_loss: f64,
}

impl TrainState {
    /// Learning rate must be finite and non-negative (zero is allowed and
    /// makes updates a no-op).
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !learning_rate.is_finite() || learning_rate < 0.0 {
            return Err(Error::invalid(
                "learning_rate",
                format!("must be finite and >= 0, got {learning_rate}"),
            ));
        }
        Ok(TrainState {
            learning_rate,
            epoch: 0,
            last_loss: f64::NAN,
        })
    }
}

impl Network {
    /// Layers must chain: each layer's input width equals the previous
    /// layer's output width.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network", "must have at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].in_dim != pair[0].out_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer chaining",
                    expected: pair[0].out_dim,
                    actual: pair[1].in_dim,
                });
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut current = input.to_vec();
        for layer in &self.layers {
            current = layer.forward(&current)?;
        }
        Ok(current)
    }

    /// Forward pass that keeps per-layer pre-activations and outputs for
    /// backpropagation. `activations[0]` is the input; `activations[i+1]`
    /// is the output of layer i.
    fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        let mut activations = vec![input.to_vec()];
        let mut preacts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.preactivate(activations.last().expect("non-empty"))?;
            let a: Vec<f64> = z.iter().map(|&zi| layer.activation.eval(zi)).collect();
            preacts.push(z);
            activations.push(a);
        }
        Ok((preacts, activations))
    }

    /// ∂E/∂w for every weight and bias, with E the half-SSE of this sample.
    pub fn grads(&self, input: &[f64], target: &[f64]) -> Result<Gradients> {
        if target.len() != self.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "target",
                expected: self.out_dim(),
                actual: target.len(),
            });
        }
        let (preacts, activations) = self.forward_trace(input)?;

        // delta_i = dE/dz_i for the current layer, starting at the output:
        // dE/do = (o - t), dE/dz = (o - t) * F'(z).
        let output = activations.last().expect("non-empty");
        let mut delta: Vec<f64> = output
            .iter()
            .zip(target)
            .zip(&preacts[self.layers.len() - 1])
            .map(|((&o, &t), &z)| {
                (o - t) * self.layers[self.layers.len() - 1].activation.deriv(z)
            })
            .collect();

        let mut layer_grads = vec![
            LayerGrads {
                weights: Vec::new(),
                bias: Vec::new(),
            };
            self.layers.len()
        ];

        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let layer_input = &activations[idx];

            let mut gw = vec![0.0; layer.in_dim * layer.out_dim];
            for (row, &d) in delta.iter().enumerate() {
                for (col, &x) in layer_input.iter().enumerate() {
                    gw[row * layer.in_dim + col] = d * x;
                }
            }
            layer_grads[idx] = LayerGrads {
                weights: gw,
                bias: delta.clone(),
            };

            if idx > 0 {
                // dE/da_j = sum_i delta_i * w_ij, then through F' of layer idx-1.
                let prev = &self.layers[idx - 1];
                let mut next_delta = vec![0.0; layer.in_dim];
                for (row, &d) in delta.iter().enumerate() {
                    for (col, nd) in next_delta.iter_mut().enumerate() {
                        *nd += d * layer.weights[row * layer.in_dim + col];
                    }
                }
                for (nd, &z) in next_delta.iter_mut().zip(&preacts[idx - 1]) {
                    *nd *= prev.activation.deriv(z);
                }
                delta = next_delta;
            }
        }

        Ok(Gradients {
            layers: layer_grads,
        })
    }

    /// Gradient-descent step w ← w − α·g. Returns the updated network.
    pub fn apply_update(&self, grads: &Gradients, state: &TrainState) -> Result<Network> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "gradient layers",
                expected: self.layers.len(),
                actual: grads.layers.len(),
            });
        }
        let mut updated = self.clone();
        for (layer, g) in updated.layers.iter_mut().zip(&grads.layers) {
            if g.weights.len() != layer.weights.len() || g.bias.len() != layer.bias.len() {
                return Err(Error::DimensionMismatch {
                    context: "gradient shape",
                    expected: layer.weights.len(),
                    actual: g.weights.len(),
                });
            }
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= state.learning_rate * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= state.learning_rate * gb;
            }
        }
        Ok(updated)
    }

    /// Compares analytic gradients against central finite differences of the
    /// half-SSE loss and returns the maximum relative deviation.
    pub fn grad_check(&self, input: &[f64], target: &[f64], h: f64) -> Result<f64> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::invalid("h", format!("must be positive, got {h}")));
        }
        let analytic = self.grads(input, target)?;
        let mut max_dev = 0.0_f64;

        let loss = |net: &Network| -> Result<f64> {
            let out = net.forward(input)?;
            half_sse(target, &out)
        };

        for (idx, layer) in self.layers.iter().enumerate() {
            for row in 0..layer.out_dim {
                for col in 0..layer.in_dim {
                    let mut plus = self.clone();
                    let mut minus = self.clone();
                    plus.layers[idx].set_weight(row, col, layer.weight(row, col) + h);
                    minus.layers[idx].set_weight(row, col, layer.weight(row, col) - h);
                    let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
                    let a = analytic.layers[idx].weights[row * layer.in_dim + col];
                    max_dev = max_dev.max(relative_deviation(a, numeric));
                }
            }
            for row in 0..layer.out_dim {
                let mut plus = self.clone();
                let mut minus = self.clone();
                plus.layers[idx].set_bias(row, layer.bias[row] + h);
                minus.layers[idx].set_bias(row, layer.bias[row] - h);
                let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
                let a = analytic.layers[idx].bias[row];
                max_dev = max_dev.max(relative_deviation(a, numeric));
            }
        }
        Ok(max_dev)
    }
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Mean squared error, the reported evaluation metric.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.is_empty() {
        return Err(Error::invalid("actual", "must be non-empty"));
    }
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "mse",
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| (a - p) * (a - p))
        .sum();
    Ok(sum / actual.len() as f64)
}

/// Half sum of squared errors, the per-sample training loss.
pub fn half_sse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.is_empty() {
        return Err(Error::invalid("actual", "must be non-empty"));
    }
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "half_sse",
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| (a - p) * (a - p))
        .sum();
    Ok(0.5 * sum)
}

/// Formats a value with 17 significant digits, enough to round-trip f64
/// bit-exactly through text.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float `{token}`: {e}")))
}

fn activation_token(a: Activation) -> String {
    match a.kind {
        ActivationKind::Sigmoid => format!("sigmoid:{}", format_f64(a.gain)),
        _ => a.kind_name().to_string(),
    }
}

fn parse_activation_token(token: &str) -> Result<Activation> {
    if let Some(gain) = token.strip_prefix("sigmoid:") {
        return Activation::sigmoid(parse_f64(gain)?);
    }
    match token {
        "linear" => Ok(Activation::linear()),
        "hyperbolic" => Ok(Activation::hyperbolic()),
        "sin" => Ok(Activation::sin()),
        "cos" => Ok(Activation::cos()),
        other => Err(Error::Parse(format!("unknown activation `{other}`"))),
    }
}

/// Serializes a network body as flat text, one line per parameter tensor:
/// `layer_index kind rows cols` followed by the row-major values. The
/// weights line carries the layer's activation as its kind; the bias line
/// uses the kind `bias`.
pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    for (idx, layer) in net.layers().iter().enumerate() {
        out.push_str(&format!(
            "{} {} {} {}",
            idx,
            activation_token(layer.activation()),
            layer.out_dim(),
            layer.in_dim()
        ));
        for w in layer.weights() {
            out.push(' ');
            out.push_str(&format_f64(*w));
        }
        out.push('\n');
        out.push_str(&format!("{} bias {} 1", idx, layer.out_dim()));
        for b in layer.bias() {
            out.push(' ');
            out.push_str(&format_f64(*b));
        }
        out.push('\n');
    }
    out
}

/// Parses the output of [`write_network`]. Expects exactly the tensor lines,
/// with any model-specific header already stripped by the caller.
pub fn parse_network(text: &str) -> Result<Network> {
    let mut layers: Vec<DenseLayer> = Vec::new();
    let mut pending: Option<(usize, Activation, usize, usize, Vec<f64>)> = None;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let idx: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty tensor line".into()))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad layer index in `{line}`")))?;
        let kind = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing tensor kind".into()))?;
        let rows: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing rows".into()))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad rows in `{line}`")))?;
        let cols: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing cols".into()))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad cols in `{line}`")))?;
        let values = tokens.map(parse_f64).collect::<Result<Vec<f64>>>()?;
        if values.len() != rows * cols {
            return Err(Error::Parse(format!(
                "tensor line for layer {idx} declares {rows}x{cols} but carries {} values",
                values.len()
            )));
        }

        if kind == "bias" {
            let (widx, activation, wrows, wcols, weights) = pending.take().ok_or_else(|| {
                Error::Parse(format!("bias line for layer {idx} without weights"))
            })?;
            if widx != idx || cols != 1 || rows != wrows {
                return Err(Error::Parse(format!(
                    "bias shape for layer {idx} does not match its weights"
                )));
            }
            layers.push(DenseLayer::from_parts(
                wcols, wrows, weights, values, activation,
            )?);
        } else {
            if pending.is_some() {
                return Err(Error::Parse(format!(
                    "weights line for layer {idx} while a previous layer lacks a bias"
                )));
            }
            if idx != layers.len() {
                return Err(Error::Parse(format!(
                    "layer index {idx} out of order (expected {})",
                    layers.len()
                )));
            }
            let activation = parse_activation_token(kind)?;
            pending = Some((idx, activation, rows, cols, values));
        }
    }
    if pending.is_some() {
        return Err(Error::Parse("trailing weights line without bias".into()));
    }
    Network::new(layers)
}
