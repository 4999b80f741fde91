use std::f64::consts::PI;

use num_complex::Complex64;

use super::amplitude::AmplitudeSolver;
use super::detector::DetectorSpec;
use super::packet::GaussianPacket;
use crate::error::{invalid, Error, Result};

/// Contour nodes per half of the Talbot contour.
pub const TALBOT_NODES: usize = 24;

/// Inverse Laplace transform of a complex-valued image on the fixed Talbot
/// contour s(θ) = rθ(cot θ + i), r = 2M/(5t), θ ∈ (-π, π).
///
/// The contour wraps the negative real axis without crossing it, so images
/// with a principal-branch cut there are admissible. Both halves of the
/// contour are summed because F(s̄) ≠ conj F(s) for complex coefficients.
pub fn talbot_inverse<F>(image: F, t: f64, nodes: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("Laplace inversion needs t > 0, got {t}")));
    }
    if nodes < 2 {
        return Err(invalid("Talbot contour needs at least two nodes"));
    }
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = Complex64::new(0.0, 0.0);
    let first = image(Complex64::new(r, 0.0));
    if !(first.re.is_finite() && first.im.is_finite()) {
        return Err(Error::ContourNode {
            index: 0,
            node: Complex64::new(r, 0.0),
        });
    }
    sum += first * (r * t).exp();
    for k in 1..nodes {
        let theta = PI * k as f64 / m;
        let cot = theta.cos() / theta.sin();
        let sigma = theta + (theta * cot - 1.0) * cot;
        for sign in [1.0, -1.0] {
            let th = sign * theta;
            let s = Complex64::new(r * theta * cot, r * th);
            let value = image(s);
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(Error::ContourNode { index: k, node: s });
            }
            let jac = Complex64::new(1.0, sign * sigma);
            sum += (s * t).exp() * value * jac;
        }
    }
    Ok(sum * (r / (2.0 * m)))
}

/// φ(t) assembled from a Talbot-inverted memory rate ḟ instead of the
/// closed-form kernel.
pub fn amplitude_via_laplace(packet: &GaussianPacket, detector: &DetectorSpec, t: f64) -> Result<Complex64> {
    if t.is_nan() || t <= 0.0 {
        return Err(invalid(format!("Laplace route needs t > 0, got {t}")));
    }
    let solver = AmplitudeSolver::new(*packet, *detector);
    let kernel = *solver.kernel();
    solver.amplitude_with(t, |s| {
        talbot_inverse(|z| kernel.memory_rate_transform(z), s, TALBOT_NODES)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{arrival_amplitude, KernelParams};

    #[test]
    fn inverts_known_transforms() {
        // 1/(s+1) -> e^{-t}, 1/sqrt(s) -> 1/sqrt(pi t)
        for t in [0.1, 1.0, 5.0] {
            let e = talbot_inverse(|s| (s + 1.0).inv(), t, TALBOT_NODES).unwrap();
            assert!((e - (-t).exp()).norm() < 1e-10);
            let r = talbot_inverse(|s| s.sqrt().inv(), t, TALBOT_NODES).unwrap();
            assert!((r - 1.0 / (PI * t).sqrt()).norm() < 1e-10);
        }
    }

    #[test]
    fn memory_rate_matches_closed_form() {
        let kernel = KernelParams::from_kappa(2.0);
        let eps = kernel.epsilon;
        let inverted = talbot_inverse(|z| kernel.memory_rate_transform(z), 1.0, TALBOT_NODES).unwrap();
        let closed = eps * eps * kernel.memory(1.0).unwrap() - eps / PI.sqrt();
        assert!((inverted - closed).norm() < 1e-9, "{inverted} vs {closed}");
    }

    #[test]
    fn agrees_with_convolution_route() {
        let packet = GaussianPacket::reference_setup();
        let det = DetectorSpec::at_origin(1.0).unwrap();
        for t in [0.5, 3.0, 4.5, 8.0] {
            let a = arrival_amplitude(&packet, &det, t).unwrap();
            let b = amplitude_via_laplace(&packet, &det, t).unwrap();
            assert!((a - b).norm() < 1e-6, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn non_finite_image_names_node() {
        let err = talbot_inverse(|_| Complex64::new(f64::NAN, 0.0), 1.0, 8).unwrap_err();
        assert!(matches!(err, Error::ContourNode { index: 0, .. }));
        assert!(amplitude_via_laplace(
            &GaussianPacket::reference_setup(),
            &DetectorSpec::at_origin(1.0).unwrap(),
            0.0
        )
        .is_err());
    }
}
