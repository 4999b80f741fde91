//! WebAssembly bindings for the browser demo.
//!
//! Each exported function is a thin wrapper over a plain Rust function of
//! the same shape, so the numerics are testable natively. Detector at the
//! origin, natural units throughout.

use eeqt_core::analytic::{arrival_density, cumulative_and_efficiency, wigner_density, DetectorSpec, GaussianPacket};
use eeqt_core::montecarlo::sample_events;
use eeqt_core::sweep::{efficiency_curve as scan, EfficiencySettings};
use wasm_bindgen::prelude::*;

/// Integration horizon and tolerance of P(∞) in the demo; looser than the
/// CLI defaults to keep the page responsive in a single thread.
const HORIZON: f64 = 200.0;
const TOL: f64 = 1e-5;
const MAX_POINTS: usize = 4096;

fn check_points(points: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must lie in 2..={MAX_POINTS}, got {points}"))
    }
}

fn packet(x0: f64, v: f64) -> Result<GaussianPacket, String> {
    GaussianPacket::new(x0, v).map_err(|e| e.to_string())
}

fn detector(alpha: f64) -> Result<DetectorSpec, String> {
    DetectorSpec::at_origin(alpha).map_err(|e| e.to_string())
}

/// Evenly spaced times on [0, t_max].
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect()
}

/// `[p(t_0..), wigner(t_0..)]` on [`time_grid`], concatenated.
pub fn density_series(x0: f64, v: f64, alpha: f64, t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(format!("t_max must be positive, got {t_max}"));
    }
    let (packet, det) = (packet(x0, v)?, detector(alpha)?);
    let times = time_grid(t_max, points);
    let mut out = Vec::with_capacity(2 * points);
    for &t in &times {
        out.push(arrival_density(&packet, &det, t).map_err(|e| e.to_string())?);
    }
    for &t in &times {
        out.push(wigner_density(&packet, 0.0, t).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Log-spaced couplings on [alpha_min, alpha_max].
pub fn alpha_grid(alpha_min: f64, alpha_max: f64, points: usize) -> Vec<f64> {
    let ratio = (alpha_max / alpha_min).ln() / (points - 1) as f64;
    (0..points).map(|i| alpha_min * (ratio * i as f64).exp()).collect()
}

/// P(∞) on [`alpha_grid`].
pub fn efficiency_series(x0: f64, v: f64, alpha_min: f64, alpha_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 3 {
        return Err(format!("an efficiency curve needs at least 3 points, got {points}"));
    }
    check_points(points)?;
    if !(alpha_min > 0.0 && alpha_max > alpha_min && alpha_max.is_finite()) {
        return Err(format!("need 0 < alpha_min < alpha_max, got {alpha_min}, {alpha_max}"));
    }
    let settings = EfficiencySettings {
        detector_position: 0.0,
        horizon: HORIZON,
        tol: TOL,
    };
    let alphas = alpha_grid(alpha_min, alpha_max, points);
    Ok(scan(&packet(x0, v)?, &alphas, &settings)
        .map_err(|e| e.to_string())?
        .efficiencies())
}

/// Sampled detection times binned on [0, t_max].
///
/// Returns `[detected_fraction, P(∞), h_0, …, h_{bins-1}]` where h is the
/// histogram normalised as a density of all runs (so it overlays p(t)).
pub fn event_histogram(
    x0: f64,
    v: f64,
    alpha: f64,
    n: usize,
    seed: u64,
    t_max: f64,
    bins: usize,
) -> Result<Vec<f64>, String> {
    check_points(bins)?;
    if n == 0 || n > 1_000_000 {
        return Err(format!("n must lie in 1..=1000000, got {n}"));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(format!("t_max must be positive, got {t_max}"));
    }
    let dist =
        cumulative_and_efficiency(&packet(x0, v)?, &detector(alpha)?, HORIZON, TOL).map_err(|e| e.to_string())?;
    let ensemble = sample_events(&dist, n, seed).map_err(|e| e.to_string())?;
    let width = t_max / bins as f64;
    let mut counts = vec![0.0; bins];
    for t in ensemble.detected_times() {
        if t < t_max {
            counts[((t / width) as usize).min(bins - 1)] += 1.0;
        }
    }
    let mut out = vec![ensemble.detected_fraction, dist.efficiency];
    out.extend(counts.iter().map(|c| c / (n as f64 * width)));
    Ok(out)
}

fn js(result: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = densityCurve)]
pub fn density_curve(x0: f64, v: f64, alpha: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    js(density_series(x0, v, alpha, t_max, points))
}

#[wasm_bindgen(js_name = efficiencyCurve)]
pub fn efficiency_curve(x0: f64, v: f64, alpha_min: f64, alpha_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    js(efficiency_series(x0, v, alpha_min, alpha_max, points))
}

#[wasm_bindgen(js_name = eventHistogram)]
pub fn histogram(
    x0: f64,
    v: f64,
    alpha: f64,
    n: usize,
    seed: u32,
    t_max: f64,
    bins: usize,
) -> Result<Vec<f64>, JsValue> {
    js(event_histogram(x0, v, alpha, n, u64::from(seed), t_max, bins))
}

#[wasm_bindgen]
pub fn version() -> String {
    eeqt_core::VERSION.to_string()
}
