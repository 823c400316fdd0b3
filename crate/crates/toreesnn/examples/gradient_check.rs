//! Validate analytic backpropagation against central finite differences on
//! randomly shaped forecaster and classifier networks.
//!
//!     cargo run --release -p toreesnn --example gradient_check

use toreesnn::experiment::run_gradcheck_suite;

fn main() -> toreesnn::Result<()> {
    let per_shape = 25;
    let report = run_gradcheck_suite(per_shape, 42)?;

    let (forecaster, classifier) = report.deviations.split_at(per_shape);
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    println!("forecaster-shaped networks: {per_shape}, max relative deviation {:.3e}", max(forecaster));
    println!("classifier-shaped networks: {per_shape}, max relative deviation {:.3e}", max(classifier));
    println!("tolerance: {:.0e}", report.tolerance);
    println!("{}", if report.passed() { "all gradients match" } else { "MISMATCH" });
    Ok(())
}
