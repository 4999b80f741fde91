//! Arrival-time statistics of a quantum particle at a point detector.
//!
//! The detector is modelled as a yes/no device whose presence damps the
//! not-yet-detected branch of the wave function. For a free particle on a
//! line the detection amplitude has a closed form built from the Faddeeva
//! function ([`analytic`]); the remaining modules provide independent
//! routes to the same numbers:
//!
//! * [`operator`]: finite-dimensional damped propagator, coupled master
//!   equation and hazard rate, plus a finite-difference model of the line;
//! * [`gridsim`]: split-step Fourier evolution with a point sink;
//! * [`montecarlo`]: sampled detection events;
//! * [`sweep`]: efficiency-versus-coupling studies and optimisation.
//!
//! All quantities are in natural units (ħ = m = η = 1), see [`units`].

pub mod analytic;
pub mod error;
pub mod gridsim;
pub mod montecarlo;
pub mod operator;
pub mod quadrature;
pub mod specfun;
pub mod sweep;
pub mod units;

mod parallel;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
