use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::model::{Hamiltonian, QuantumModel};
use crate::error::{invalid, Error, Result};

/// Survival below which the hazard rate is reported as undefined.
pub const SURVIVAL_FLOOR: f64 = 1e-12;

/// Largest ‖A h‖₁ per Taylor substep of the vector propagation.
const TAYLOR_THETA: f64 = 5.0;
const TAYLOR_MAX_TERMS: usize = 64;
/// Degree-13 Padé scaling threshold, used for the squaring diagnostic.
const PADE13_THETA: f64 = 5.371920351148152;
/// Dense models up to this size use the full matrix exponential.
const DENSE_LIMIT: usize = 64;

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !t.is_finite() {
        return Err(invalid("time must be finite"));
    }
    Ok(())
}

/// K(t) = exp(-iHt - F²t/2) by scaling and squaring with a degree-13 Padé
/// approximant; the result is checked to be a contraction.
pub fn damped_propagator(model: &QuantumModel, t: f64) -> Result<DMatrix<Complex64>> {
    check_time(t)?;
    let n = model.dim();
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let a = model.generator() * Complex64::new(t, 0.0);
    let a_norm = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = (a_norm / PADE13_THETA).log2().ceil().max(0.0) as u32;
    let k = a.exp();
    let finite = k.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    let norm = if finite {
        k.clone().singular_values().max()
    } else {
        f64::INFINITY
    };
    if norm.is_nan() || norm > 1.0 + 1e-10 {
        return Err(Error::ExponentialNotConverged { norm, squarings });
    }
    Ok(k)
}

/// K(t)ψ. Small dense models use [`damped_propagator`]; otherwise a
/// truncated Taylor series of the action is applied on substeps with
/// ‖A h‖₁ ≤ 5.
pub fn propagate(model: &QuantumModel, psi: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
    check_time(t)?;
    if psi.len() != model.dim() {
        return Err(invalid("state length does not match model dimension"));
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    if matches!(model.hamiltonian(), Hamiltonian::Dense(_)) && model.dim() <= DENSE_LIMIT {
        return Ok(damped_propagator(model, t)? * psi);
    }
    taylor_action(model, psi, t)
}

fn taylor_action(model: &QuantumModel, psi: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
    let bound = model.generator_norm_bound() * t;
    let steps = (bound / TAYLOR_THETA).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut v = psi.clone();
    for _ in 0..steps {
        let mut term = v.clone();
        let mut sum = v.clone();
        let mut converged = false;
        let mut previous = f64::INFINITY;
        for k in 1..=TAYLOR_MAX_TERMS {
            term = model.apply_generator(&term) * Complex64::new(h / k as f64, 0.0);
            sum += &term;
            let size = term.norm();
            if size + previous <= 1e-16 * sum.norm() {
                converged = true;
                break;
            }
            previous = size;
        }
        if !converged {
            return Err(Error::ExponentialNotConverged {
                norm: bound,
                squarings: steps as u32,
            });
        }
        v = sum;
    }
    Ok(v)
}

/// P(t) = 1 - ⟨ψ|K†K|ψ⟩.
pub fn detection_probability(model: &QuantumModel, t: f64) -> Result<f64> {
    if model.kappa() == 0.0 {
        // K(t) is unitary; skip the round-off in 1 - ‖Kψ‖².
        check_time(t)?;
        return Ok(0.0);
    }
    let phi = propagate(model, model.psi0(), t)?;
    Ok((1.0 - phi.norm_squared()).clamp(0.0, 1.0))
}

/// Arrival density p(t) = κ |⟨u|K(t)ψ⟩|² = -dS/dt.
pub fn arrival_density(model: &QuantumModel, t: f64) -> Result<f64> {
    let phi = propagate(model, model.psi0(), t)?;
    Ok(model.flux(&phi))
}

/// Hazard λ(t) = κ |⟨u|K(t)ψ⟩|² / ⟨ψ|K†K|ψ⟩.
pub fn rate_function(model: &QuantumModel, t: f64) -> Result<f64> {
    let phi = propagate(model, model.psi0(), t)?;
    hazard(model, &phi, t)
}

fn hazard(model: &QuantumModel, phi: &DVector<Complex64>, t: f64) -> Result<f64> {
    let survival = phi.norm_squared();
    if survival < SURVIVAL_FLOOR {
        return Err(Error::StateExhausted { t, survival });
    }
    Ok(model.flux(phi) / survival)
}

/// Damped state carried forward in time; each advance reuses the state
/// reached by the previous one.
#[derive(Debug, Clone)]
pub struct RateTracker<'a> {
    model: &'a QuantumModel,
    time: f64,
    state: DVector<Complex64>,
}

impl<'a> RateTracker<'a> {
    pub fn new(model: &'a QuantumModel) -> Self {
        Self {
            model,
            time: 0.0,
            state: model.psi0().clone(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &DVector<Complex64> {
        &self.state
    }

    /// Moves forward to `t` (which must not lie in the past).
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(invalid(format!("cannot advance backwards from {} to {t}", self.time)));
        }
        if t > self.time {
            self.state = propagate(self.model, &self.state, t - self.time)?;
            self.time = t;
        }
        Ok(())
    }

    pub fn survival(&self) -> f64 {
        self.state.norm_squared()
    }

    pub fn density(&self) -> f64 {
        self.model.flux(&self.state)
    }

    pub fn rate(&self) -> Result<f64> {
        hazard(self.model, &self.state, self.time)
    }
}

/// Survival and density sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub density: Vec<f64>,
}

/// Tabulates S(t) and p(t) on `times` (non-decreasing, starting at t ≥ 0).
pub fn rate_series(model: &QuantumModel, times: &[f64]) -> Result<RateSeries> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("time grid must be non-decreasing"));
    }
    let mut tracker = RateTracker::new(model);
    let mut out = RateSeries {
        times: times.to_vec(),
        survival: Vec::with_capacity(times.len()),
        density: Vec::with_capacity(times.len()),
    };
    for &t in times {
        check_time(t)?;
        tracker.advance_to(t)?;
        out.survival.push(tracker.survival());
        out.density.push(tracker.density());
    }
    Ok(out)
}
