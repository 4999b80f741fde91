//! Finite-dimensional detector models: damped propagator, coupled master
//! equation and hazard rate.
//!
//! A model consists of a Hamiltonian H, a sensitive state |u⟩ and a
//! coupling κ. The undetected branch evolves with K(t) = exp(-iHt - F²t/2),
//! F = √κ |u⟩⟨u|, so that P(t) = 1 - ⟨ψ|K†K|ψ⟩. The same numbers follow
//! from the master equation pair for (ρ₀, ρ₁), which is integrated
//! independently as a cross-check.

mod line;
mod master;
mod model;
mod propagator;

pub use line::{discretized_line_model, LineGrid};
pub use master::master_evolve;
pub use model::{CoupledState, Hamiltonian, QuantumModel};
pub use propagator::{
    arrival_density, damped_propagator, detection_probability, propagate, rate_function, rate_series, RateSeries,
    RateTracker, SURVIVAL_FLOOR,
};
