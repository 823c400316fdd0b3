//! Persist both model kinds to the flat text format and reload them
//! bit-exactly.
//!
//!     cargo run --release -p toreesnn --example save_load_models

use toreesnn::errclass::{train_error_classifier, ClassifiedSample, ErrorClassifierModel};
use toreesnn::reesnn::{build_reesnn, ReesnnModel};

fn main() -> toreesnn::Result<()> {
    let forecaster = build_reesnn(5, 10, 42)?;
    let text = forecaster.save();
    println!("forecaster serializes to {} bytes; first line:", text.len());
    println!("  {}", text.lines().next().unwrap());
    let reloaded = ReesnnModel::load(&text)?;
    assert_eq!(reloaded, forecaster);
    println!("  round trip: bit-exact\n");

    let samples: Vec<ClassifiedSample> = (0..30)
        .map(|i| ClassifiedSample {
            window: vec![0.01 * i as f64; 4],
            label: [(-1i8), 0, 1][i % 3],
        })
        .collect();
    let classifier = train_error_classifier(&samples, 6, 20, 0.1, 7)?
        .with_delta(0.05)?
        .with_omega(0.02)?;
    let text = classifier.save();
    println!("classifier serializes to {} bytes; first line:", text.len());
    println!("  {}", text.lines().next().unwrap());
    let reloaded = ErrorClassifierModel::load(&text)?;
    assert_eq!(reloaded, classifier);
    println!("  round trip: bit-exact");
    Ok(())
}
