//! Screening the discrepancy function of a computer model for active inputs.
//!
//! A computer model `f(x, θ)` rarely matches field observations exactly; the
//! usual fix is an additive discrepancy term `δ(x)` modeled as a Gaussian
//! stochastic process, so that `y_i = f(x_i, θ) + δ(x_i) + ε_i`. This crate
//! answers the question *which inputs drive the discrepancy*: an input that is
//! active in `δ` is one the model is mishandling.
//!
//! Two screening methods are provided:
//!
//! * **PIPS** (posterior inclusion probability screening, [`pips`]): run one
//!   MCMC chain under the full model, then reweight the draws of the
//!   correlation parameters against a Beta(α, 1) spike to estimate Bayes
//!   factors for all `2^p` input subsets in a single post-processing pass.
//! * **RDVS** (reference distribution variable selection, [`rdvs`]): the
//!   classical baseline that repeats the chain with a fictitious input
//!   appended and compares posterior medians against its reference
//!   distribution.
//!
//! The numeric core is generic over the floating-point type via the
//! [`Scalar`] trait; `f64` is the type the command-line tool and the
//! benchmark harness instantiate.

pub mod bench;
pub mod emulator;
pub mod error;
pub mod io;
pub mod kernel;
pub mod likelihood;
pub mod linalg;
pub mod mcmc;
pub mod optimize;
pub mod pipeline;
pub mod pips;
pub mod priors;
pub mod rdvs;
pub mod rng;
pub mod scalar;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the main entry-point types.
pub type Design64 = kernel::Design<f64>;
pub type Chain64 = mcmc::Chain<f64>;
pub type ScreeningResult64 = pips::ScreeningResult<f64>;
pub type RdvsResult64 = rdvs::RdvsResult<f64>;
pub type FittedEmulator64 = emulator::FittedEmulator<f64>;
pub type Dataset64 = scenarios::Dataset<f64>;
