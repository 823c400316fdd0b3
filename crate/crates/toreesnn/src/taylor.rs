//! First-order Taylor fusion of a raw forecast with an estimated error:
//! corrected = raw + f(e)·Δt, with the estimated error f(e) supplied by the
//! class predictor and Δt one sample by default.

use crate::errclass::{class_to_error, predict_class, ErrorClassifierModel};
use crate::error::{Error, Result};
use crate::reesnn::ForecastRecord;

/// Correction step configuration. The expansion order is fixed at one;
/// `dt` is the step in sample units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionConfig {
    pub dt: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig { dt: 1.0 }
    }
}

impl CorrectionConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(CorrectionConfig { dt })
    }
}

/// corrected = raw + f_e·dt.
pub fn taylor_correct(raw: f64, f_e: f64, cfg: &CorrectionConfig) -> Result<f64> {
    if !raw.is_finite() || !f_e.is_finite() {
        return Err(Error::invalid("raw/f_e", "inputs must be finite"));
    }
    Ok(raw + f_e * cfg.dt)
}

/// Applies the classifier-driven correction over a record stream: for every
/// record with at least `d` predecessors, predicts the error class from the
/// trailing error window, converts it via the ±ω rule, and fills the
/// `error_class`, `estimated_error`, and `corrected_forecast` fields. The
/// first `d` records pass through untouched.
pub fn correct_records(
    records: &[ForecastRecord],
    classifier: &ErrorClassifierModel,
    cfg: &CorrectionConfig,
) -> Result<Vec<ForecastRecord>> {
    let mut context = classifier.zero_context();
    correct_records_with(records, classifier.d(), classifier.omega(), cfg, |window| {
        let (class, next) = predict_class(classifier, window, &context)?;
        context = next;
        Ok(class)
    })
}

/// The correction pass with an arbitrary class predictor, used to validate
/// the class→error→Taylor composition independently of a learned model.
/// `classify` receives the window [e(t−1), …, e(t−d)], newest first.
pub fn correct_records_with(
    records: &[ForecastRecord],
    d: usize,
    omega: f64,
    cfg: &CorrectionConfig,
    mut classify: impl FnMut(&[f64]) -> Result<i8>,
) -> Result<Vec<ForecastRecord>> {
    if d < 1 {
        return Err(Error::invalid("d", "window must be at least 1"));
    }
    if records.len() <= d {
        return Err(Error::invalid(
            "records",
            format!("need more than d = {d} records, got {}", records.len()),
        ));
    }
    if records.windows(2).any(|pair| pair[1].t <= pair[0].t) {
        return Err(Error::invalid("records", "must be in temporal order"));
    }

    let mut out = records.to_vec();
    for i in d..out.len() {
        let window: Vec<f64> = (1..=d).map(|j| records[i - j].error).collect();
        let class = classify(&window)?;
        let estimated = class_to_error(class, omega)?;
        let corrected = taylor_correct(out[i].raw_forecast, estimated, cfg)?;
        out[i].error_class = Some(class);
        out[i].estimated_error = Some(estimated);
        out[i].corrected_forecast = Some(corrected);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errclass::ErrorClassifierModel;
    use crate::nn::{mse, Activation, DenseLayer, Network};

    fn default_cfg() -> CorrectionConfig {
        CorrectionConfig::default()
    }

    #[test]
    fn zero_estimate_is_identity() {
        assert_eq!(taylor_correct(0.37, 0.0, &default_cfg()).unwrap(), 0.37);
    }

    #[test]
    fn signed_corrections_shift_by_omega() {
        assert_eq!(taylor_correct(0.50, 0.03, &default_cfg()).unwrap(), 0.53);
        assert_eq!(taylor_correct(0.50, -0.03, &default_cfg()).unwrap(), 0.47);
    }

    #[test]
    fn correction_is_additive_in_the_estimate() {
        let cfg = CorrectionConfig::new(0.5).unwrap();
        for (a, b) in [(0.02, 0.03), (-0.1, 0.04), (0.0, -0.2)] {
            let joint = taylor_correct(0.4, a + b, &cfg).unwrap();
            assert!((joint - (0.4 + (a + b) * cfg.dt)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonfinite_and_bad_dt() {
        assert!(taylor_correct(f64::NAN, 0.0, &default_cfg()).is_err());
        assert!(taylor_correct(0.5, f64::INFINITY, &default_cfg()).is_err());
        assert!(CorrectionConfig::new(0.0).is_err());
        assert!(CorrectionConfig::new(-1.0).is_err());
    }

    fn record_stream(actuals: &[f64], raws: &[f64]) -> Vec<ForecastRecord> {
        actuals
            .iter()
            .zip(raws)
            .enumerate()
            .map(|(t, (&a, &r))| ForecastRecord::new(t, a, r))
            .collect()
    }

    #[test]
    fn forced_classes_produce_expected_corrections() {
        let records = record_stream(&[0.5; 5], &[0.48, 0.52, 0.50, 0.47, 0.53]);
        let classes = [1i8, -1, 0];
        let mut next = classes.iter();
        let out = correct_records_with(&records, 2, 0.02, &default_cfg(), |_| {
            Ok(*next.next().unwrap())
        })
        .unwrap();
        assert_eq!(out.len(), records.len());
        assert!(out[0].corrected_forecast.is_none());
        assert!(out[1].corrected_forecast.is_none());
        assert_eq!(out[2].corrected_forecast, Some(0.50 + 0.02));
        assert_eq!(out[3].corrected_forecast, Some(0.47 - 0.02));
        assert_eq!(out[4].corrected_forecast, Some(0.53));
        // Earlier fields stay untouched.
        assert_eq!(out[2].raw_forecast, 0.50);
        assert_eq!(out[2].error, records[2].error);
    }

    #[test]
    fn windows_are_trailing_errors_newest_first() {
        let records = record_stream(&[0.5, 0.5, 0.5, 0.5], &[0.4, 0.6, 0.45, 0.5]);
        let mut seen = Vec::new();
        correct_records_with(&records, 2, 0.01, &default_cfg(), |w| {
            seen.push(w.to_vec());
            Ok(0)
        })
        .unwrap();
        let e: Vec<f64> = records.iter().map(|r| r.error).collect();
        assert_eq!(seen, vec![vec![e[1], e[0]], vec![e[2], e[1]]]);
    }

    #[test]
    fn correction_magnitude_is_bounded_by_omega_dt() {
        let records = record_stream(&[0.5; 10], &[0.45; 10]);
        let omega = 0.03;
        let cfg = CorrectionConfig::new(2.0).unwrap();
        let mut flip = 1i8;
        let out = correct_records_with(&records, 3, omega, &cfg, |_| {
            flip = -flip;
            Ok(flip)
        })
        .unwrap();
        for r in &out {
            if let Some(c) = r.corrected_forecast {
                assert!((c - r.raw_forecast).abs() <= omega * cfg.dt + 1e-15);
            }
        }
    }

    #[test]
    fn always_zero_classifier_leaves_forecasts_alone() {
        // A zero-weight classifier emits equal outputs, and ties resolve to
        // class 0, so the full model path must also be the identity.
        let sigmoid = Activation::sigmoid(1.0).unwrap();
        let net = Network::new(vec![
            DenseLayer::zeros(2 + 4, 4, sigmoid).unwrap(),
            DenseLayer::zeros(4, 3, sigmoid).unwrap(),
        ])
        .unwrap();
        let model = ErrorClassifierModel::from_network(2, net, 0.05, 0.04, 0).unwrap();
        let records = record_stream(&[0.5; 6], &[0.4, 0.6, 0.45, 0.55, 0.5, 0.52]);
        let out = correct_records(&records, &model, &default_cfg()).unwrap();
        for r in &out[2..] {
            assert_eq!(r.error_class, Some(0));
            assert_eq!(r.corrected_forecast, Some(r.raw_forecast));
        }
    }

    #[test]
    fn oracle_perfect_signs_cut_mse_on_planted_errors() {
        // Constant-magnitude planted errors with a stub returning the true
        // sign of the NEXT error: corrections cancel the error exactly.
        let magnitude = 0.05;
        let signs: Vec<i8> = (0..40).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let actuals: Vec<f64> = (0..40).map(|i| 0.5 + 0.1 * (i as f64 * 0.3).sin()).collect();
        let raws: Vec<f64> = actuals
            .iter()
            .zip(&signs)
            .map(|(&a, &s)| a - s as f64 * magnitude)
            .collect();
        let records = record_stream(&actuals, &raws);

        let d = 3;
        let mut idx = d;
        let out = correct_records_with(&records, d, magnitude, &default_cfg(), |_| {
            let class = signs[idx];
            idx += 1;
            Ok(class)
        })
        .unwrap();

        let corrected: Vec<f64> = out[d..].iter().map(|r| r.best_forecast()).collect();
        let raw: Vec<f64> = out[d..].iter().map(|r| r.raw_forecast).collect();
        let target: Vec<f64> = out[d..].iter().map(|r| r.actual).collect();
        let corrected_mse = mse(&target, &corrected).unwrap();
        let raw_mse = mse(&target, &raw).unwrap();
        assert!(corrected_mse <= raw_mse);
        assert!(corrected_mse < raw_mse / 2.0);
    }

    #[test]
    fn rejects_insufficient_history_and_disorder() {
        let records = record_stream(&[0.5; 3], &[0.4; 3]);
        assert!(correct_records_with(&records, 3, 0.01, &default_cfg(), |_| Ok(0)).is_err());
        let mut shuffled = record_stream(&[0.5; 5], &[0.4; 5]);
        shuffled.swap(1, 3);
        assert!(correct_records_with(&shuffled, 2, 0.01, &default_cfg(), |_| Ok(0)).is_err());
    }
}
