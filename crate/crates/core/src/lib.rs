//! Differentially private stochastic convex optimization in Euclidean and
//! `lp` geometries.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pieces: norms and mirror maps, noise mechanisms and their calibration,
//! losses, constraint sets and synthetic data distributions, and the private
//! solvers built on top of them. All randomness is drawn from a caller-supplied
//! [`rand::Rng`]; nothing here reads the clock, the filesystem or global state.
//!
//! Experiment orchestration, file formats and the command line live in the
//! companion `dpsco` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod euclidean;
pub mod lp;
pub mod mechanisms;
pub mod problems;
pub mod space;
pub mod vector;

pub use error::{Error, Result};
pub use mechanisms::{GgNoiseSpec, PrivacyBudget};
pub use space::SpaceSpec;
pub use vector::Vector;

/// Non-fatal conditions a solver ran into. They are reported alongside the
/// output instead of being logged, since this crate has no logger.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A large-sample condition of the utility analysis does not hold.
    SampleSizeBelowRecommended { required: f64, n: usize },
    /// The requested iteration/batch count exceeded `n` and was clamped.
    IterationsClamped { requested: usize, used: usize },
    /// The privacy-regime check was disabled by configuration.
    PrivacyCheckDisabled,
    /// An automatic parameter fell outside its admissible range and was clamped.
    ParameterClamped { name: &'static str, from: f64, to: f64 },
    /// A parameter lies outside the range in which the guarantee is stated.
    OutsideStatedRegime { what: &'static str },
}
