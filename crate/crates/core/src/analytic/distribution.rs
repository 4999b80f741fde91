use serde::{Deserialize, Serialize};

use super::amplitude::{AmplitudeSolver, AMPLITUDE_TOL};
use super::detector::DetectorSpec;
use super::packet::GaussianPacket;
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussKronrod15;

/// Default integration horizon in natural time units.
pub const DEFAULT_HORIZON: f64 = 200.0;

/// The horizon is doubled at most this many times while the tail bound
/// exceeds the tolerance.
const MAX_HORIZON_DOUBLINGS: u32 = 5;
const MIN_PANEL: f64 = 1e-7;

/// Tabulated arrival-time statistics.
///
/// `times` are panel boundaries of the adaptive integration, `density` and
/// `cumulative` hold p and P there. Between nodes P is interpolated by a
/// monotone cubic Hermite spline whose slopes are the exact densities.
/// Beyond the horizon the density is modelled by its asymptotic t⁻³ decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalDistribution {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// P(∞) = P(horizon) + tail_estimate.
    pub efficiency: f64,
    /// ∫_T^∞ p assuming p ∝ t⁻³ beyond T.
    pub tail_estimate: f64,
    /// Bound on the neglected mass, plus the accumulated quadrature error.
    pub tail_error: f64,
    pub quadrature_error: f64,
    /// Uncertainty of `tail_estimate`: half the spread of p(t)t³ over
    /// [T/2, T] divided by T². Small once p has reached its t⁻³ regime.
    pub extrapolation_error: f64,
    /// The extrapolation error still exceeded the tolerance at the largest
    /// horizon tried.
    pub low_confidence: bool,
}

impl ArrivalDistribution {
    /// Builds a distribution from a table; checks shape and monotonicity.
    pub fn from_table(
        times: Vec<f64>,
        density: Vec<f64>,
        cumulative: Vec<f64>,
        tail_estimate: f64,
        tail_error: f64,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != density.len() || times.len() != cumulative.len() {
            return Err(invalid("distribution table needs >= 2 rows of equal length"));
        }
        let efficiency = cumulative[cumulative.len() - 1] + tail_estimate;
        let dist = Self {
            times,
            density,
            cumulative,
            efficiency,
            tail_estimate,
            tail_error,
            quadrature_error: 0.0,
            extrapolation_error: 0.0,
            low_confidence: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty table")
    }

    pub fn validate(&self) -> Result<()> {
        for i in 1..self.times.len() {
            if self.times[i] <= self.times[i - 1] {
                return Err(invalid(format!("times not increasing at index {i}")));
            }
            if self.cumulative[i] < self.cumulative[i - 1] {
                return Err(Error::NonMonotone { index: i });
            }
        }
        if self.density.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(invalid("density must be finite and non-negative"));
        }
        if !(self.efficiency.is_finite() && self.efficiency <= 1.0 + self.tail_error + 1e-9) {
            return Err(invalid(format!("efficiency {} exceeds 1", self.efficiency)));
        }
        Ok(())
    }

    /// P(t), including the modelled tail beyond the horizon.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.cumulative[0];
        }
        let horizon = self.horizon();
        let last = self.cumulative[self.cumulative.len() - 1];
        if t >= horizon {
            return last + self.tail_estimate * (1.0 - (horizon / t).powi(2));
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        self.hermite(i, t)
    }

    /// Smallest t with P(t) = level, by bisection to 1e-9 in t.
    /// Returns `None` when the level is never reached.
    pub fn quantile(&self, level: f64) -> Option<f64> {
        if level >= self.efficiency || level < 0.0 {
            return None;
        }
        let horizon = self.horizon();
        let last = self.cumulative[self.cumulative.len() - 1];
        if level >= last {
            // invert the t⁻³ tail model exactly
            let frac = (level - last) / self.tail_estimate;
            return Some(horizon / (1.0 - frac).sqrt());
        }
        let i = self.cumulative.partition_point(|&c| c <= level).saturating_sub(1);
        let (mut lo, mut hi) = (self.times[i], self.times[(i + 1).min(self.times.len() - 1)]);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(i, mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn hermite(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (self.cumulative[i], self.cumulative[i + 1]);
        let h = t1 - t0;
        let delta = (y1 - y0) / h;
        let (mut m0, mut m1) = (self.density[i], self.density[i + 1]);
        if delta <= 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            // Fritsch–Carlson limiter
            let (a, b) = (m0 / delta, m1 / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m0 *= tau;
                m1 *= tau;
            }
        }
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1).clamp(y0, y1)
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Adaptive Gauss–Kronrod integration of p(t) on [0, T] with a t⁻³ tail
/// model beyond T.
///
/// The horizon starts at `t_max` and is doubled while the uncertainty of
/// the tail model exceeds `tol`; if it still does after the last doubling
/// the result is flagged `low_confidence` rather than rejected.
/// `tail_error` always carries a bound on the whole neglected mass, so
/// P(T) + tail_error ≥ P(∞) up to quadrature error.
pub fn cumulative_and_efficiency(
    packet: &GaussianPacket,
    detector: &DetectorSpec,
    t_max: f64,
    tol: f64,
) -> Result<ArrivalDistribution> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(format!("tol must be positive, got {tol}")));
    }
    let solver = AmplitudeSolver::new(*packet, *detector).with_tolerance(AMPLITUDE_TOL.min(tol));
    if detector.alpha == 0.0 {
        return Ok(ArrivalDistribution {
            times: vec![0.0, t_max],
            density: vec![0.0, 0.0],
            cumulative: vec![0.0, 0.0],
            efficiency: 0.0,
            tail_estimate: 0.0,
            tail_error: 0.0,
            quadrature_error: 0.0,
            extrapolation_error: 0.0,
            low_confidence: false,
        });
    }

    let early = early_window(packet, detector.position).min(t_max);
    let mut edges = initial_edges(early, t_max);
    let mut panels = integrate_panels(&solver, &edges, tol * 0.5 / t_max)?;
    let mut horizon = t_max;
    let mut doublings = 0;
    loop {
        let end_density = solver.density(horizon)?;
        let (lowest, highest) = envelope_range(&solver, horizon)?;
        let h2 = horizon * horizon;
        let tail = Tail {
            estimate: 0.5 * end_density * horizon,
            bound: (0.5 * highest / h2).max(0.5 * end_density * horizon),
            extrapolation: 0.5 * (highest - lowest) / h2,
        };
        if tail.extrapolation <= tol || doublings >= MAX_HORIZON_DOUBLINGS {
            return assemble(&solver, panels, end_density, tail, tol);
        }
        let next = 2.0 * horizon;
        edges = geometric_edges(horizon, next);
        panels.extend(integrate_panels(&solver, &edges, tol * 0.5 / next)?);
        horizon = next;
        doublings += 1;
    }
}

/// Time scale over which the packet passes (or spreads over) the detector.
fn early_window(packet: &GaussianPacket, a: f64) -> f64 {
    let gap = (a - packet.x0).abs();
    let window = if packet.v * (a - packet.x0) > 0.0 {
        1.5 * gap / packet.v.abs() + 6.0
    } else {
        gap + 6.0
    };
    window.clamp(6.0, 40.0)
}

fn initial_edges(early: f64, t_max: f64) -> Vec<f64> {
    let width = 0.5;
    let n = (early / width).ceil() as usize;
    let mut edges: Vec<f64> = (0..=n).map(|k| (k as f64 * width).min(early)).collect();
    edges.dedup();
    if t_max > early {
        edges.extend(geometric_edges(early, t_max).into_iter().skip(1));
    }
    edges
}

/// Panels whose width grows by ~25% per panel from `start` to `end`.
fn geometric_edges(start: f64, end: f64) -> Vec<f64> {
    let mut edges = vec![start];
    let mut x = start;
    while x < end {
        let width = (0.25 * x).max(0.25);
        x = (x + width).min(end);
        if end - x < 0.1 * width {
            x = end;
        }
        edges.push(x);
    }
    edges
}

fn integrate_panels(solver: &AmplitudeSolver, edges: &[f64], tol_per_time: f64) -> Result<Vec<Panel>> {
    let work: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let results = crate::parallel::map(&work, |&(lo, hi)| refine(solver, lo, hi, tol_per_time));
    let mut panels = Vec::new();
    for r in results {
        panels.extend(r?);
    }
    Ok(panels)
}

fn refine(solver: &AmplitudeSolver, lo: f64, hi: f64, tol_per_time: f64) -> Result<Vec<Panel>> {
    let mut accepted = Vec::new();
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let x = GaussKronrod15::abscissae(a, b);
        let mut f = [0.0; 15];
        for (fi, &t) in f.iter_mut().zip(&x) {
            *fi = solver.density(t)?;
        }
        let (value, error) = GaussKronrod15::combine(a, b, &f);
        let allowed = tol_per_time * (b - a);
        if error <= allowed.max(1e-15) || b - a < MIN_PANEL {
            accepted.push(Panel {
                lo: a,
                hi: b,
                value,
                error,
            });
        } else {
            let mid = 0.5 * (a + b);
            // push right first so panels come out left to right
            stack.push((mid, b));
            stack.push((a, mid));
        }
    }
    Ok(accepted)
}

/// (inf, sup) of p(t) t³ over [T/2, T], sampled at 17 points.
fn envelope_range(solver: &AmplitudeSolver, horizon: f64) -> Result<(f64, f64)> {
    let mut inf = f64::INFINITY;
    let mut sup: f64 = 0.0;
    for k in 0..=16 {
        let t = horizon * (0.5 + 0.5 * k as f64 / 16.0);
        let value = solver.density(t)? * t * t * t;
        inf = inf.min(value);
        sup = sup.max(value);
    }
    Ok((inf, sup))
}

struct Tail {
    /// ∫_T^∞ p under the t⁻³ model.
    estimate: f64,
    /// Upper bound on the neglected mass.
    bound: f64,
    /// Uncertainty of the estimate.
    extrapolation: f64,
}

fn assemble(
    solver: &AmplitudeSolver,
    mut panels: Vec<Panel>,
    end_density: f64,
    tail: Tail,
    tol: f64,
) -> Result<ArrivalDistribution> {
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut times = Vec::with_capacity(panels.len() + 1);
    let mut cumulative = Vec::with_capacity(panels.len() + 1);
    times.push(0.0);
    cumulative.push(0.0);
    let mut total = 0.0;
    let mut quadrature_error = 0.0;
    for p in &panels {
        total += p.value.max(0.0);
        quadrature_error += p.error;
        times.push(p.hi);
        cumulative.push(total);
    }
    let node_times: Vec<f64> = times[..times.len() - 1].to_vec();
    let mut density: Vec<f64> = crate::parallel::map(&node_times, |&t| solver.density(t))
        .into_iter()
        .collect::<Result<_>>()?;
    density.push(end_density);
    Ok(ArrivalDistribution {
        times,
        density,
        cumulative,
        efficiency: total + tail.estimate,
        tail_estimate: tail.estimate,
        tail_error: tail.bound + quadrature_error,
        quadrature_error,
        extrapolation_error: tail.extrapolation,
        low_confidence: tail.extrapolation + quadrature_error > tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::arrival_density;

    #[test]
    fn zero_coupling_has_zero_efficiency() {
        let d = cumulative_and_efficiency(
            &GaussianPacket::reference_setup(),
            &DetectorSpec::at_origin(0.0).unwrap(),
            DEFAULT_HORIZON,
            1e-6,
        )
        .unwrap();
        assert_eq!(d.efficiency, 0.0);
        assert!(d.cumulative.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn reference_setup_is_monotone_and_bounded() {
        let d = cumulative_and_efficiency(
            &GaussianPacket::reference_setup(),
            &DetectorSpec::at_origin(1.0).unwrap(),
            DEFAULT_HORIZON,
            1e-7,
        )
        .unwrap();
        d.validate().unwrap();
        assert_eq!(d.cumulative[0], 0.0);
        assert!(d.cumulative.windows(2).all(|w| w[1] >= w[0]));
        assert!(d.cumulative.last().unwrap() + d.tail_error <= 1.0 + 1e-6);
        assert!(!d.low_confidence);
        assert!(d.efficiency > 0.3 && d.efficiency < 0.5, "{}", d.efficiency);
    }

    #[test]
    fn interpolated_cdf_matches_direct_quadrature() {
        let packet = GaussianPacket::reference_setup();
        let det = DetectorSpec::at_origin(2.0).unwrap();
        let d = cumulative_and_efficiency(&packet, &det, 50.0, 1e-8).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..d.times.len() - 1 {
            let (lo, hi) = (d.times[i], d.times[i + 1]);
            if lo > 20.0 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let direct = d.cumulative[i]
                + crate::quadrature::GaussLegendre::sixteen()
                    .integrate(lo, mid, |t| arrival_density(&packet, &det, t).unwrap());
            worst = worst.max((d.cdf(mid) - direct).abs());
        }
        assert!(worst < 2e-4, "worst interpolation error {worst}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = cumulative_and_efficiency(
            &GaussianPacket::stationary_at(0.0),
            &DetectorSpec::at_origin(1.3216).unwrap(),
            DEFAULT_HORIZON,
            1e-6,
        )
        .unwrap();
        for level in [
            0.01,
            0.2,
            0.5,
            0.7,
            d.cumulative.last().unwrap() + 0.5 * d.tail_estimate,
        ] {
            let t = d.quantile(level).unwrap();
            assert!((d.cdf(t) - level).abs() < 1e-8, "level {level}");
        }
        assert!(d.quantile(d.efficiency + 1e-9).is_none());
    }

    #[test]
    fn non_monotone_table_rejected() {
        let err =
            ArrivalDistribution::from_table(vec![0.0, 1.0, 2.0], vec![0.1, 0.1, 0.1], vec![0.0, 0.3, 0.2], 0.0, 0.0)
                .unwrap_err();
        assert_eq!(err, Error::NonMonotone { index: 2 });
    }
}
