//! Deterministic generation and normalization of the four benchmark series:
//! Mackey-Glass, NARMA, Lorenz, and the Hénon map.
//!
//! All generators are pure functions of their parameters (plus a seed where
//! inputs are random), so identical calls produce bit-identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Runaway-iteration threshold; far above any attractor scale.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Which system produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOrigin {
    MackeyGlass,
    Narma,
    Lorenz,
    Henon,
    External,
}

impl SeriesOrigin {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesOrigin::MackeyGlass => "mackey_glass",
            SeriesOrigin::Narma => "narma",
            SeriesOrigin::Lorenz => "lorenz",
            SeriesOrigin::Henon => "henon",
            SeriesOrigin::External => "external",
        }
    }
}

/// An ordered sequence of scalar samples with generation metadata and
/// normalization state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    origin: SeriesOrigin,
    /// (norm_min, norm_max) recorded when the series was normalized.
    norm: Option<(f64, f64)>,
}

impl TimeSeries {
    /// Rejects empty series and non-finite samples.
    pub fn new(values: Vec<f64>, dt: f64, origin: SeriesOrigin) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "series must be non-empty"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                format!("non-finite sample at index {pos}"),
            ));
        }
        Ok(TimeSeries {
            values,
            dt,
            origin,
            norm: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> SeriesOrigin {
        self.origin
    }

    pub fn is_normalized(&self) -> bool {
        self.norm.is_some()
    }

    /// (norm_min, norm_max) if the series has been normalized.
    pub fn norm_bounds(&self) -> Option<(f64, f64)> {
        self.norm
    }

    /// A contiguous sub-series keeping metadata and normalization state.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeries> {
        if start >= end || end > self.values.len() {
            return Err(Error::invalid(
                "slice",
                format!("range {start}..{end} out of bounds for length {}", self.len()),
            ));
        }
        Ok(TimeSeries {
            values: self.values[start..end].to_vec(),
            dt: self.dt,
            origin: self.origin,
            norm: self.norm,
        })
    }
}

/// Mackey-Glass map parameters: x(n+1) = (x(n) + a·x(n−τ)/(1 + x(n−τ)^10)) / (1+b).
#[derive(Debug, Clone, PartialEq)]
pub struct MgParams {
    pub a: f64,
    pub b: f64,
    pub tau: usize,
    /// Sampling interval recorded as metadata only; the map itself is discrete.
    pub step: f64,
}

impl Default for MgParams {
    fn default() -> Self {
        MgParams {
            a: 0.2,
            b: 0.1,
            tau: 17,
            step: 0.1,
        }
    }
}

impl MgParams {
    /// Constant warm-up history of the conventional 1.2, τ+1 entries.
    pub fn default_history(&self) -> Vec<f64> {
        vec![1.2; self.tau + 1]
    }
}

/// NARMA parameters: y(t+1) = c1·y(t) + c2·y(t)·Σ_{i=1..k} x(t−i+1)
/// + c3·x(t−k−1)·x(t) + c4, driven by i.i.d. uniform inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NarmaParams {
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub input_low: f64,
    pub input_high: f64,
}

impl Default for NarmaParams {
    fn default() -> Self {
        NarmaParams {
            k: 10,
            c1: 0.3,
            c2: 0.05,
            c3: 1.5,
            c4: 0.1,
            input_low: 0.0,
            input_high: 0.5,
        }
    }
}

/// Lorenz system parameters and fixed-step integration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
    pub dt: f64,
    pub subsample: usize,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
            dt: 0.01,
            subsample: 1,
            x0: 1.0,
            y0: 1.0,
            z0: 1.0,
        }
    }
}

/// Hénon map parameters: x(t+1) = y(t) − a·x²(t) + 1, y(t+1) = b·x(t).
#[derive(Debug, Clone, PartialEq)]
pub struct HenonParams {
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Default for HenonParams {
    fn default() -> Self {
        HenonParams {
            a: 1.4,
            b: 0.3,
            x0: 0.0,
            y0: 0.0,
        }
    }
}

/// Iterates the discrete Mackey-Glass map for `n` samples. `history` holds
/// x(−τ)..x(0), exactly τ+1 finite entries.
pub fn gen_mackey_glass(p: &MgParams, n: usize, history: &[f64]) -> Result<TimeSeries> {
    if p.tau < 1 {
        return Err(Error::invalid("tau", "delay must be at least 1"));
    }
    if p.b == -1.0 {
        return Err(Error::invalid("b", "1 + b must be nonzero"));
    }
    if n < 1 {
        return Err(Error::invalid("n", "must generate at least one sample"));
    }
    if history.len() != p.tau + 1 {
        return Err(Error::invalid(
            "history",
            format!("expected {} entries (τ+1), got {}", p.tau + 1, history.len()),
        ));
    }
    if let Some(pos) = history.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "history",
            format!("non-finite entry at index {pos}"),
        ));
    }

    let mut buf = history.to_vec();
    buf.reserve(n);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let cur = buf[buf.len() - 1];
        let delayed = buf[buf.len() - 1 - p.tau];
        let next = (cur + p.a * delayed / (1.0 + delayed.powi(10))) / (1.0 + p.b);
        buf.push(next);
        out.push(next);
    }
    TimeSeries::new(out, p.step, SeriesOrigin::MackeyGlass)
}

/// Draws `n` driving inputs uniform on [input_low, input_high] from the
/// seeded generator and iterates the NARMA recurrence with zero initial
/// history. Returns the target series paired with the inputs that drove it.
pub fn gen_narma(p: &NarmaParams, n: usize, seed: u64) -> Result<(TimeSeries, Vec<f64>)> {
    if p.input_low >= p.input_high {
        return Err(Error::invalid(
            "input_low",
            "input_low must be less than input_high",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(p.input_low..=p.input_high))
        .collect();
    let target = narma_from_inputs(p, &inputs)?;
    Ok((target, inputs))
}

/// The NARMA recurrence over a caller-supplied input sequence. History
/// before index 0 is zero for both inputs and targets.
pub fn narma_from_inputs(p: &NarmaParams, inputs: &[f64]) -> Result<TimeSeries> {
    if p.k < 1 {
        return Err(Error::invalid("k", "order must be at least 1"));
    }
    let n = inputs.len();
    if n < p.k + 2 {
        return Err(Error::invalid(
            "n",
            format!("need at least k+2 = {} samples, got {n}", p.k + 2),
        ));
    }

    let x = |idx: isize| -> f64 {
        if idx < 0 {
            0.0
        } else {
            inputs[idx as usize]
        }
    };

    let mut y = vec![0.0; n];
    for t in 0..n - 1 {
        let ti = t as isize;
        let recent_sum: f64 = (0..p.k as isize).map(|i| x(ti - i)).sum();
        let next = p.c1 * y[t] + p.c2 * y[t] * recent_sum
            + p.c3 * x(ti - p.k as isize - 1) * x(ti)
            + p.c4;
        if next.abs() > DIVERGENCE_LIMIT || !next.is_finite() {
            return Err(Error::Divergence {
                step: t + 1,
                detail: format!("|y| exceeded {DIVERGENCE_LIMIT:e}"),
            });
        }
        y[t + 1] = next;
    }
    TimeSeries::new(y, 1.0, SeriesOrigin::Narma)
}

fn lorenz_deriv(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [
        p.sigma * (y - x),
        p.r * x - x * z - y,
        x * y - p.b * z,
    ]
}

fn rk4_step(p: &LorenzParams, s: [f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], scale: f64| {
        [a[0] + scale * b[0], a[1] + scale * b[1], a[2] + scale * b[2]]
    };
    let k1 = lorenz_deriv(p, s);
    let k2 = lorenz_deriv(p, add(s, k1, dt / 2.0));
    let k3 = lorenz_deriv(p, add(s, k2, dt / 2.0));
    let k4 = lorenz_deriv(p, add(s, k3, dt));
    [
        s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrates the Lorenz system with a classical fourth-order fixed-step
/// scheme, emitting the x-component every `subsample` steps.
pub fn gen_lorenz(p: &LorenzParams, n: usize) -> Result<TimeSeries> {
    if !p.dt.is_finite() || p.dt <= 0.0 {
        return Err(Error::invalid("dt", "integration step must be positive"));
    }
    if p.subsample < 1 {
        return Err(Error::invalid("subsample", "must be at least 1"));
    }
    if n < 1 {
        return Err(Error::invalid("n", "must generate at least one sample"));
    }

    let mut state = [p.x0, p.y0, p.z0];
    let mut out = Vec::with_capacity(n);
    let mut step_index = 0usize;
    for _ in 0..n {
        for _ in 0..p.subsample {
            state = rk4_step(p, state, p.dt);
            step_index += 1;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step: step_index,
                    detail: "integrator state left the finite range".into(),
                });
            }
        }
        out.push(state[0]);
    }
    TimeSeries::new(out, p.dt * p.subsample as f64, SeriesOrigin::Lorenz)
}

/// Iterates the Hénon map from (x0, y0), returning n samples of the
/// x-component starting at x(1).
pub fn gen_henon(p: &HenonParams, n: usize) -> Result<TimeSeries> {
    if n < 1 {
        return Err(Error::invalid("n", "must generate at least one sample"));
    }
    let mut x = p.x0;
    let mut y = p.y0;
    let mut out = Vec::with_capacity(n);
    for step in 1..=n {
        let x_next = y - p.a * x * x + 1.0;
        let y_next = p.b * x;
        if x_next.abs() > DIVERGENCE_LIMIT || !x_next.is_finite() {
            return Err(Error::Divergence {
                step,
                detail: format!("|x| exceeded {DIVERGENCE_LIMIT:e}"),
            });
        }
        x = x_next;
        y = y_next;
        out.push(x);
    }
    TimeSeries::new(out, 1.0, SeriesOrigin::Henon)
}

/// Affine map of every sample to [0, 1]; the minimum maps to exactly 0 and
/// the maximum to exactly 1. The original bounds are recorded on the result.
pub fn normalize(s: &TimeSeries) -> Result<TimeSeries> {
    let min = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 0.0 {
        return Err(Error::invalid(
            "series",
            format!("zero range: min = max = {min}"),
        ));
    }
    let range = max - min;
    let values = s.values.iter().map(|&v| (v - min) / range).collect();
    Ok(TimeSeries {
        values,
        dt: s.dt,
        origin: s.origin,
        norm: Some((min, max)),
    })
}

/// Inverse of the affine map recorded at normalization time.
pub fn denormalize(s: &TimeSeries, value: f64) -> Result<f64> {
    let (min, max) = s.norm.ok_or_else(|| {
        Error::invalid("series", "denormalize requires a normalized series")
    })?;
    Ok(min + value * (max - min))
}

/// Series CSV: header `index,value`, one sample per row, 17 significant
/// digits.
pub fn series_to_csv(s: &TimeSeries) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in s.values.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", crate::nn::format_f64(*v)));
    }
    out
}

/// Key-value metadata sidecar describing how a series was generated.
pub fn series_metadata(s: &TimeSeries, params: &str, seed: Option<u64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("origin = {}\n", s.origin.name()));
    out.push_str(&format!("params = {params}\n"));
    match seed {
        Some(seed) => out.push_str(&format!("seed = {seed}\n")),
        None => out.push_str("seed = none\n"),
    }
    out.push_str(&format!("normalized = {}\n", s.is_normalized()));
    match s.norm {
        Some((min, max)) => {
            out.push_str(&format!("norm_min = {}\n", crate::nn::format_f64(min)));
            out.push_str(&format!("norm_max = {}\n", crate::nn::format_f64(max)));
        }
        None => {
            out.push_str("norm_min = none\n");
            out.push_str("norm_max = none\n");
        }
    }
    out
}
