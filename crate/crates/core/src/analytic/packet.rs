use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Free Gaussian wave packet of unit width released at t = 0.
///
/// ψ(x, 0) = (2π)^{-1/4} exp(-(x - x0)²/4 + i v (x - x0)), so |ψ|² has
/// standard deviation 1 (the width scale η in natural units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub x0: f64,
    pub v: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, v: f64) -> Result<Self> {
        if !(x0.is_finite() && v.is_finite()) {
            return Err(invalid(format!("packet parameters must be finite (x0={x0}, v={v})")));
        }
        Ok(Self { x0, v })
    }

    /// Figure setup: starts at x = -8 moving right with v = 2.
    pub fn reference_setup() -> Self {
        Self { x0: -8.0, v: 2.0 }
    }

    /// Packet at rest centred on `position`.
    pub fn stationary_at(position: f64) -> Self {
        Self { x0: position, v: 0.0 }
    }

    /// Mirror image about `a`: x0 → 2a - x0, v → -v.
    pub fn mirrored(&self, a: f64) -> Self {
        Self {
            x0: 2.0 * a - self.x0,
            v: -self.v,
        }
    }

    pub fn is_centered_at_rest(&self, a: f64) -> bool {
        self.v == 0.0 && self.x0 == a
    }

    /// Closed-form free evolution; `t` is not checked.
    pub(crate) fn amplitude_unchecked(&self, x: f64, t: f64) -> Complex64 {
        let spread = Complex64::new(1.0, 0.5 * t);
        let norm = (2.0 * PI).powf(-0.25) / spread.sqrt();
        let d = x - self.x0 - self.v * t;
        let phase = Complex64::new(0.0, self.v * (x - self.x0) - 0.5 * self.v * self.v * t);
        norm * (-(d * d) / (4.0 * spread) + phase).exp()
    }

    /// ψ₀(a, t) for the detector position; the at-rest centred packet
    /// skips the exponential.
    pub(crate) fn amplitude_at_detector(&self, a: f64, t: f64) -> Complex64 {
        if self.is_centered_at_rest(a) {
            (2.0 * PI).powf(-0.25) / Complex64::new(1.0, 0.5 * t).sqrt()
        } else {
            self.amplitude_unchecked(a, t)
        }
    }
}

/// Freely evolving amplitude ψ₀(x, t).
pub fn free_packet_amplitude(packet: &GaussianPacket, x: f64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    Ok(packet.amplitude_unchecked(x, t))
}

/// The ad hoc density |ψ₀(a, t)|² (proportionality constant 1).
pub fn wigner_density(packet: &GaussianPacket, a: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(packet.amplitude_at_detector(a, t).norm_sqr())
}

/// ∫₀ᵀ |ψ₀(a, t)|² dt by graded Gauss–Legendre panels.
pub fn wigner_integral(packet: &GaussianPacket, a: f64, horizon: f64) -> Result<f64> {
    check_time(horizon)?;
    let rule = crate::quadrature::GaussLegendre::sixteen();
    let points = crate::quadrature::graded_breakpoints(0.25, horizon);
    let mut total = 0.0;
    for w in points.windows(2) {
        // subdivide so each panel spans at most a quarter of its start time
        let pieces = 8;
        let h = (w[1] - w[0]) / pieces as f64;
        for k in 0..pieces {
            let lo = w[0] + k as f64 * h;
            total += rule.integrate(lo, lo + h, |t| packet.amplitude_at_detector(a, t).norm_sqr());
        }
    }
    Ok(total)
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm_on_line(packet: &GaussianPacket, t: f64) -> f64 {
        let center = packet.x0 + packet.v * t;
        let half = 12.0 * (1.0 + 0.25 * t * t).sqrt();
        let rule = crate::quadrature::GaussLegendre::sixteen();
        let panels = 400;
        let h = 2.0 * half / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = center - half + k as f64 * h;
                rule.integrate(lo, lo + h, |x| packet.amplitude_unchecked(x, t).norm_sqr())
            })
            .sum()
    }

    #[test]
    fn peak_modulus_at_release() {
        let p = GaussianPacket::new(1.5, -0.7).unwrap();
        let psi = free_packet_amplitude(&p, 1.5, 0.0).unwrap();
        assert!((psi.norm() - (2.0 * PI).powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn norm_is_conserved() {
        let p = GaussianPacket::reference_setup();
        for t in [0.0, 1.0, 5.0] {
            let n = norm_on_line(&p, t);
            assert!((n - 1.0).abs() < 1e-10, "t={t}: {n}");
        }
    }

    #[test]
    fn centre_and_variance() {
        let p = GaussianPacket::new(-3.0, 1.25).unwrap();
        let t = 4.0;
        let rule = crate::quadrature::GaussLegendre::sixteen();
        let (lo, hi) = (-60.0, 60.0);
        let panels = 600;
        let h = (hi - lo) / panels as f64;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            for (x, w) in rule.on(a, a + h) {
                let d = p.amplitude_unchecked(x, t).norm_sqr() * w;
                m0 += d;
                m1 += d * x;
                m2 += d * x * x;
            }
        }
        let mean = m1 / m0;
        let var = m2 / m0 - mean * mean;
        assert!((mean - (-3.0 + 1.25 * t)).abs() < 1e-10);
        assert!((var - (1.0 + 0.25 * t * t)).abs() < 1e-9);
    }

    #[test]
    fn wigner_peak_density() {
        let p = GaussianPacket::stationary_at(0.0);
        let d = wigner_density(&p, 0.0, 0.0).unwrap();
        assert!((d - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn wigner_reflection_symmetric() {
        for t in [0.0, 0.3, 2.0, 11.0] {
            let left = wigner_density(&GaussianPacket::new(-2.5, 0.0).unwrap(), 0.0, t).unwrap();
            let right = wigner_density(&GaussianPacket::new(2.5, 0.0).unwrap(), 0.0, t).unwrap();
            assert!((left - right).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_integral_keeps_growing() {
        let p = GaussianPacket::stationary_at(0.0);
        let a = wigner_integral(&p, 0.0, 1e2).unwrap();
        let b = wigner_integral(&p, 0.0, 1e3).unwrap();
        let c = wigner_integral(&p, 0.0, 1e4).unwrap();
        assert!(b > a && c > b);
        // |ψ(0,t)|² ≈ 2/(√(2π) t): equal increments per decade
        let slope = 2.0 / (2.0 * PI).sqrt() * 10f64.ln();
        assert!(((c - b) - slope).abs() < 1e-3);
    }

    #[test]
    fn negative_time_rejected() {
        let p = GaussianPacket::reference_setup();
        assert!(matches!(
            free_packet_amplitude(&p, 0.0, -1.0),
            Err(Error::NegativeTime(_))
        ));
        assert!(wigner_density(&p, 0.0, f64::NAN).is_err());
    }
}
