use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::specfun;

/// Point detector at `position` with dimensionless coupling α = mηκ/ħ.
///
/// The sensitive state is the improper position eigenstate ⟨x|u⟩ = δ(x - a);
/// in natural units κ = α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub position: f64,
    pub alpha: f64,
}

impl DetectorSpec {
    pub fn new(position: f64, alpha: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(invalid(format!("detector position must be finite, got {position}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!("coupling must be finite and >= 0, got {alpha}")));
        }
        Ok(Self { position, alpha })
    }

    pub fn at_origin(alpha: f64) -> Result<Self> {
        Self::new(0.0, alpha)
    }

    pub fn kappa(&self) -> f64 {
        self.alpha
    }

    pub fn kernel(&self) -> KernelParams {
        KernelParams::from_kappa(self.kappa())
    }
}

/// ε = (κ/2)(1/2i)^{1/2} on the principal branch, i.e. (κ/2√2) e^{-iπ/4}.
///
/// This branch gives Re ε > 0, hence a decaying memory kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub epsilon: Complex64,
}

impl KernelParams {
    pub fn from_kappa(kappa: f64) -> Self {
        let epsilon = Complex64::from_polar(kappa / (2.0 * 2f64.sqrt()), -FRAC_PI_4);
        Self { epsilon }
    }

    /// f(t) = e^{ε²t} erfc(ε√t).
    pub fn memory(&self, t: f64) -> Result<Complex64> {
        specfun::erfc_scaled_ray(self.epsilon, t)
    }

    /// ḟ(s) = ε² f(s) - ε/√(πs) for s > 0.
    pub fn memory_rate(&self, s: f64) -> Result<Complex64> {
        let eps = self.epsilon;
        Ok(eps * eps * self.memory(s)? - eps / (PI * s).sqrt())
    }

    /// Laplace transform of ḟ: G̃(z) - 1 = -ε / (z^{1/2} + ε).
    pub fn memory_rate_transform(&self, z: Complex64) -> Complex64 {
        -self.epsilon / (z.sqrt() + self.epsilon)
    }

    /// G̃(z) = z^{1/2} / (z^{1/2} + ε).
    pub fn resolvent_factor(&self, z: Complex64) -> Complex64 {
        let root = z.sqrt();
        root / (root + self.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_square_and_branch() {
        for kappa in [0.1, 1.0, 1.3216, 7.0] {
            let k = KernelParams::from_kappa(kappa);
            let sq = k.epsilon * k.epsilon;
            assert!((sq - Complex64::new(0.0, -kappa * kappa / 8.0)).norm() < 1e-14);
            assert!(k.epsilon.re > 0.0);
            // (κ/2)·sqrt(1/(2i)) on the principal branch
            let direct = 0.5 * kappa * Complex64::new(0.0, 2.0).inv().sqrt();
            assert!((direct - k.epsilon).norm() < 1e-14);
        }
    }

    #[test]
    fn resolvent_tends_to_one() {
        let k = KernelParams::from_kappa(2.0);
        let mut last = f64::INFINITY;
        for z in [1e2, 1e4, 1e6, 1e8] {
            let dev = (k.resolvent_factor(Complex64::new(z, 0.0)) - 1.0).norm();
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn rejects_negative_coupling() {
        assert!(DetectorSpec::new(0.0, -0.1).is_err());
        assert!(DetectorSpec::new(f64::INFINITY, 1.0).is_err());
        assert!(DetectorSpec::new(0.0, 0.0).is_ok());
    }
}
