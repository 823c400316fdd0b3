//! Chaotic time-series forecasting with a recursive extended exponential
//! smoothed neural network (REESNN) and Taylor-based error correction
//! (TOREESNN).
//!
//! The pipeline has three stages:
//!
//! 1. **Forecast** — a Jordan-style two-layer sigmoid network whose inputs
//!    are its own k most recent forecasts and the k most recent forecast
//!    errors, trained one-step-ahead by online backpropagation
//!    ([`reesnn`]).
//! 2. **Estimate the error** — an Elman recurrent classifier predicts
//!    whether the next forecast error will be below −δ, inside [−δ, δ], or
//!    above δ, and a signed magnitude ω turns the class into an estimated
//!    error ([`errclass`]).
//! 3. **Correct** — a first-order Taylor step adds the estimated error to
//!    the raw forecast ([`taylor`]).
//!
//! [`series`] generates the four chaotic benchmarks (Mackey-Glass, NARMA,
//! Lorenz, Hénon), [`nn`] holds the shared neural primitives with a
//! finite-difference gradient oracle, and [`experiment`] drives the full
//! generate → train → calibrate → evaluate pipeline with MSE reporting.
//!
//! See the `examples/` directory for one runnable example per stage and
//! the `toreesnn` binary for the `gen`, `experiment`, and `gradcheck`
//! subcommands.

pub mod errclass;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod reesnn;
pub mod series;
pub mod taylor;

pub use error::{Error, Result};
