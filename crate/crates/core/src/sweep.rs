//! Efficiency-versus-coupling studies.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::{cumulative_and_efficiency, DetectorSpec, GaussianPacket, DEFAULT_HORIZON};
use crate::error::{invalid, Error, Result};

/// Golden ratio conjugate (√5 - 1)/2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Default velocity grid for the saturation study.
pub const DEFAULT_VELOCITIES: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
/// Starting position of the packet in the velocity study.
pub const SWEEP_X0: f64 = -8.0;
/// Relative search bracket of the velocity study, in units of max(v, 1/4).
pub const SWEEP_BRACKET: (f64, f64) = (0.5, 8.0);
const VELOCITY_SCALE_FLOOR: f64 = 0.25;

/// How each efficiency value P(∞) is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySettings {
    pub detector_position: f64,
    pub horizon: f64,
    pub tol: f64,
}

impl Default for EfficiencySettings {
    fn default() -> Self {
        Self {
            detector_position: 0.0,
            horizon: DEFAULT_HORIZON,
            tol: 1e-6,
        }
    }
}

/// One evaluated point of an efficiency curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    pub alpha: f64,
    pub efficiency: f64,
    pub tail_error: f64,
    pub low_confidence: bool,
}

/// P(∞) for one coupling value.
pub fn efficiency(packet: &GaussianPacket, alpha: f64, settings: &EfficiencySettings) -> Result<EfficiencyPoint> {
    let det = DetectorSpec::new(settings.detector_position, alpha)?;
    let dist = cumulative_and_efficiency(packet, &det, settings.horizon, settings.tol)?;
    Ok(EfficiencyPoint {
        alpha,
        efficiency: dist.efficiency,
        tail_error: dist.tail_error,
        low_confidence: dist.low_confidence,
    })
}

/// Efficiency values over a coupling grid with the location of the maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub points: Vec<EfficiencyPoint>,
    pub argmax: usize,
    pub alpha_star: f64,
    pub p_star: f64,
    /// The maximum sits on the first or last grid point.
    pub boundary: bool,
    /// Number of discrete-slope sign changes beyond the single one a
    /// unimodal curve has.
    pub unimodality_violations: usize,
    /// Indices of points whose efficiency uncertainty exceeded the tolerance.
    pub low_confidence: Vec<usize>,
}

impl ScanResult {
    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }

    pub fn efficiencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.efficiency).collect()
    }

    /// `alpha,efficiency,tail_error,low_confidence` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,efficiency,tail_error,low_confidence")?;
        for p in &self.points {
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{}",
                p.alpha, p.efficiency, p.tail_error, p.low_confidence as u8
            )?;
        }
        Ok(())
    }
}

/// P(∞) on a non-negative ascending coupling grid (evaluated in parallel).
pub fn efficiency_curve(packet: &GaussianPacket, alphas: &[f64], settings: &EfficiencySettings) -> Result<ScanResult> {
    if alphas.is_empty() {
        return Err(invalid("coupling grid is empty"));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("coupling grid must be non-negative and strictly ascending"));
    }
    let points: Vec<EfficiencyPoint> = crate::parallel::map(alphas, |&a| efficiency(packet, a, settings))
        .into_iter()
        .collect::<Result<_>>()?;
    let argmax = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.efficiency.total_cmp(&b.1.efficiency))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let values: Vec<f64> = points.iter().map(|p| p.efficiency).collect();
    Ok(ScanResult {
        argmax,
        alpha_star: points[argmax].alpha,
        p_star: points[argmax].efficiency,
        boundary: argmax == 0 || argmax + 1 == points.len(),
        unimodality_violations: slope_sign_changes(&values).saturating_sub(1),
        low_confidence: points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.low_confidence)
            .map(|(i, _)| i)
            .collect(),
        points,
    })
}

/// Sign changes of the discrete slope, ignoring flat steps.
pub fn slope_sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|s| s[0] != s[1]).count()
}

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub alpha_star: f64,
    pub p_star: f64,
    pub evaluations: usize,
    pub low_confidence: bool,
}

/// Maximises P(∞) over α in `bracket` by golden-section search to
/// |Δα| ≤ `tol`.
///
/// The efficiency varies on a multiplicative scale in α, so the search
/// runs in ln α when the bracket is positive. The bracket is first checked
/// at its ends and (geometric) midpoint: the midpoint must beat both ends,
/// otherwise [`Error::BracketInvalid`] is returned.
pub fn optimize_alpha(
    packet: &GaussianPacket,
    bracket: (f64, f64),
    tol: f64,
    settings: &EfficiencySettings,
) -> Result<Optimum> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(invalid(format!("bracket ({lo}, {hi}) must satisfy 0 <= lo < hi")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let logarithmic = lo > 0.0;
    let to_alpha = |x: f64| if logarithmic { x.exp() } else { x };
    let (mut a, mut b) = if logarithmic { (lo.ln(), hi.ln()) } else { (lo, hi) };

    let mut evaluations = 0;
    let mut low_confidence = false;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        let p = efficiency(packet, to_alpha(x), settings)?;
        low_confidence |= p.low_confidence;
        Ok(p.efficiency)
    };
    let mid = 0.5 * (a + b);
    let (f_lo, f_mid, f_hi) = (eval(a)?, eval(mid)?, eval(b)?);
    if !(f_mid > f_lo && f_mid > f_hi) {
        return Err(Error::BracketInvalid { lo, hi });
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while to_alpha(b) - to_alpha(a) > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
    }
    let (x_star, p_star) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(Optimum {
        alpha_star: to_alpha(x_star),
        p_star,
        evaluations,
        low_confidence,
    })
}

/// One row of the velocity study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityRow {
    pub v: f64,
    pub alpha_star: f64,
    pub p_star: f64,
    pub low_confidence: bool,
}

/// Optimal coupling per velocity for packets starting at `x0`.
///
/// The optimum grows linearly with v, so the search bracket and tolerance
/// are taken relative to the velocity scale s = max(v, 1/4): the search
/// runs on (lo·s, hi·s) to |Δα| ≤ tol·s. Rows are computed in parallel.
pub fn velocity_sweep(
    velocities: &[f64],
    x0: f64,
    bracket: (f64, f64),
    tol: f64,
    settings: &EfficiencySettings,
) -> Result<Vec<VelocityRow>> {
    if velocities.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || velocities.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("velocities must be non-negative and strictly ascending"));
    }
    crate::parallel::map(velocities, |&v| {
        let packet = GaussianPacket::new(x0, v)?;
        let s = v.max(VELOCITY_SCALE_FLOOR);
        let opt = optimize_alpha(&packet, (bracket.0 * s, bracket.1 * s), tol * s, settings)?;
        Ok(VelocityRow {
            v,
            alpha_star: opt.alpha_star,
            p_star: opt.p_star,
            low_confidence: opt.low_confidence,
        })
    })
    .into_iter()
    .collect()
}

/// `v,alpha_star,p_star,low_confidence` rows.
pub fn write_velocity_csv<W: Write>(rows: &[VelocityRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "v,alpha_star,p_star,low_confidence")?;
    for r in rows {
        writeln!(
            out,
            "{:.11e},{:.11e},{:.11e},{}",
            r.v, r.alpha_star, r.p_star, r.low_confidence as u8
        )?;
    }
    Ok(())
}

/// Least-squares line y = slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("linear fit needs at least two (x, y) pairs"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_changes() {
        assert_eq!(slope_sign_changes(&[0.0, 1.0, 2.0, 1.0, 0.5]), 1);
        assert_eq!(slope_sign_changes(&[0.0, 1.0, 0.5, 1.0, 0.5]), 3);
        assert_eq!(slope_sign_changes(&[1.0, 1.0, 1.0]), 0);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12 && (fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_endpoint_and_ordering_checks() {
        let packet = GaussianPacket::stationary_at(0.0);
        let settings = EfficiencySettings::default();
        let scan = efficiency_curve(&packet, &[0.0, 1.0, 4.0], &settings).unwrap();
        assert_eq!(scan.points[0].efficiency, 0.0);
        assert!(!scan.boundary);
        assert!(efficiency_curve(&packet, &[1.0, 0.5], &settings).is_err());
    }

    #[test]
    fn bracket_without_interior_maximum_is_rejected() {
        let packet = GaussianPacket::stationary_at(0.0);
        let err = optimize_alpha(&packet, (3.0, 6.0), 1e-2, &EfficiencySettings::default()).unwrap_err();
        assert!(matches!(err, Error::BracketInvalid { .. }));
    }

    #[test]
    fn mirrored_packets_share_optimum() {
        let settings = EfficiencySettings::default();
        let a = optimize_alpha(&GaussianPacket::new(-3.0, 1.0).unwrap(), (0.3, 6.0), 1e-3, &settings).unwrap();
        let b = optimize_alpha(&GaussianPacket::new(3.0, -1.0).unwrap(), (0.3, 6.0), 1e-3, &settings).unwrap();
        assert!((a.alpha_star - b.alpha_star).abs() < 1e-6);
        assert!((a.p_star - b.p_star).abs() < 1e-9);
    }
}
