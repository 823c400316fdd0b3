//! Turn forecast errors into a labeled dataset and train the Elman error
//! classifier: pick the threshold δ from the error distribution, window the
//! errors, train, and report held-out accuracy per class.
//!
//!     cargo run --release -p toreesnn --example classify_errors

use toreesnn::errclass::{
    build_classifier_dataset, predict_sequence, select_delta, train_error_classifier,
};
use toreesnn::reesnn::{build_reesnn, reesnn_forecast, train_reesnn};
use toreesnn::series::{gen_mackey_glass, normalize, MgParams};

fn main() -> toreesnn::Result<()> {
    // Stage 1 output: a trained forecaster and its errors on fresh data.
    let params = MgParams::default();
    let raw = gen_mackey_glass(&params, 1100, &params.default_history())?;
    let series = normalize(&raw)?;
    let model = build_reesnn(5, 10, 1)?;
    let trained = train_reesnn(&model, &series.slice(100, 600)?, 200, 0.1)?;
    let records = reesnn_forecast(&trained.model, &series.slice(600, 1100)?, 5)?;
    let errors: Vec<f64> = records.iter().map(|r| r.error).collect();

    // Threshold from the error distribution: the median of |e|.
    let delta = select_delta(&errors, 0.5)?;
    println!("harvested {} errors, δ = {delta:.4e}", errors.len());

    let d = 5;
    let samples = build_classifier_dataset(&errors, d, delta)?;
    let counts = samples.iter().fold([0usize; 3], |mut acc, s| {
        acc[(s.label + 1) as usize] += 1;
        acc
    });
    println!(
        "dataset: {} windows of width {d}  (labels -1: {}, 0: {}, +1: {})",
        samples.len(),
        counts[0],
        counts[1],
        counts[2]
    );

    let holdout = samples.len() / 5;
    let split = samples.len() - holdout;
    let classifier = train_error_classifier(&samples[..split], 10, 200, 0.1, 7)?;

    let predicted = predict_sequence(&classifier, &samples)?;
    let accuracy = |range: std::ops::Range<usize>| {
        let hits = range
            .clone()
            .filter(|&i| predicted[i] == samples[i].label)
            .count();
        hits as f64 / range.len() as f64
    };
    println!("training-part accuracy: {:.3}", accuracy(0..split));
    println!("held-out accuracy:      {:.3}", accuracy(split..samples.len()));
    Ok(())
}
