use num_complex::Complex64;

use super::detector::{DetectorSpec, KernelParams};
use super::packet::{check_time, GaussianPacket};
use crate::error::{Error, Result};
use crate::quadrature::{graded_breakpoints, GaussLegendre};

/// Absolute tolerance on φ(t) used by [`arrival_amplitude`].
pub const AMPLITUDE_TOL: f64 = 1e-8;

/// Panels are bisected at most this many times.
const MAX_DEPTH: u32 = 10;

/// Evaluates φ(t) = √κ (ψ₀(a,t) + ∫₀ᵗ ḟ(s) ψ₀(a,t-s) ds) for one
/// packet/detector pair.
///
/// The convolution is split at s = t/2. On [0, t/2] the substitution
/// s = u² turns the 1/√s singularity of ḟ into a bounded integrand; on
/// [t/2, t] the variable r = t - s is used directly. Both pieces start from
/// graded panels, each of which is bisected adaptively until its halves
/// agree with the whole to its share of the tolerance.
#[derive(Debug, Clone)]
pub struct AmplitudeSolver {
    packet: GaussianPacket,
    detector: DetectorSpec,
    kernel: KernelParams,
    tol: f64,
}

impl AmplitudeSolver {
    pub fn new(packet: GaussianPacket, detector: DetectorSpec) -> Self {
        Self {
            packet,
            detector,
            kernel: detector.kernel(),
            tol: AMPLITUDE_TOL,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn packet(&self) -> &GaussianPacket {
        &self.packet
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.detector
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn amplitude(&self, t: f64) -> Result<Complex64> {
        let kernel = self.kernel;
        self.amplitude_with(t, |s| kernel.memory_rate(s))
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.amplitude(t)?.norm_sqr())
    }

    /// φ(t) with an arbitrary source for ḟ(s); the Laplace route plugs in
    /// a numerically inverted kernel here.
    pub fn amplitude_with<K>(&self, t: f64, rate: K) -> Result<Complex64>
    where
        K: Fn(f64) -> Result<Complex64>,
    {
        check_time(t)?;
        let kappa = self.detector.kappa();
        if kappa == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let a = self.detector.position;
        let free = self.packet.amplitude_at_detector(a, t);
        if t == 0.0 {
            return Ok(kappa.sqrt() * free);
        }
        let memory = self.convolution(t, &rate)?;
        Ok(kappa.sqrt() * (free + memory))
    }

    fn convolution<K>(&self, t: f64, rate: &K) -> Result<Complex64>
    where
        K: Fn(f64) -> Result<Complex64>,
    {
        let a = self.detector.position;
        let packet = self.packet;
        let half = 0.5 * t;
        let eps = self.kernel.epsilon.norm().max(1.0);
        let u_points = graded_breakpoints(0.5 / eps, half.sqrt());
        let r_points = graded_breakpoints(0.5, half);
        let panels = (u_points.len() + r_points.len() - 2) as f64;
        // tolerance on the bracket of φ, i.e. before the √κ factor
        let budget = self.tol / (self.detector.kappa().sqrt() * panels);

        let near = |u: f64| -> Result<Complex64> {
            let s = u * u;
            Ok(2.0 * u * rate(s)? * packet.amplitude_at_detector(a, t - s))
        };
        let far = |r: f64| -> Result<Complex64> { Ok(rate(t - r)? * packet.amplitude_at_detector(a, r)) };

        let mut acc = Adaptive::default();
        for w in u_points.windows(2) {
            acc.panel(&near, w[0], w[1], budget)?;
        }
        for w in r_points.windows(2) {
            acc.panel(&far, w[0], w[1], budget)?;
        }
        if acc.unresolved > 0.0 {
            return Err(Error::QuadratureNotConverged {
                achieved: self.detector.kappa().sqrt() * acc.unresolved,
                requested: self.tol,
            });
        }
        Ok(acc.sum)
    }
}

/// Recursive bisection with a 16-point Gauss–Legendre rule: a panel is
/// accepted when its two halves reproduce the whole to the budget.
#[derive(Default)]
struct Adaptive {
    sum: Complex64,
    unresolved: f64,
}

impl Adaptive {
    fn panel<F>(&mut self, f: &F, a: f64, b: f64, budget: f64) -> Result<()>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let whole = gauss16(f, a, b)?;
        self.refine(f, a, b, whole, budget, MAX_DEPTH)
    }

    fn refine<F>(&mut self, f: &F, a: f64, b: f64, whole: Complex64, budget: f64, depth: u32) -> Result<()>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let mid = 0.5 * (a + b);
        let left = gauss16(f, a, mid)?;
        let right = gauss16(f, mid, b)?;
        let diff = (left + right - whole).norm();
        if diff <= budget {
            self.sum += left + right;
            return Ok(());
        }
        if depth == 0 {
            self.sum += left + right;
            self.unresolved += diff;
            return Ok(());
        }
        self.refine(f, a, mid, left, 0.5 * budget, depth - 1)?;
        self.refine(f, mid, b, right, 0.5 * budget, depth - 1)
    }
}

fn gauss16<F>(f: &F, a: f64, b: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, w) in GaussLegendre::sixteen().on(a, b) {
        sum += f(x)? * w;
    }
    Ok(sum)
}

/// Detection amplitude φ(t) for a free packet and a point detector.
pub fn arrival_amplitude(packet: &GaussianPacket, detector: &DetectorSpec, t: f64) -> Result<Complex64> {
    AmplitudeSolver::new(*packet, *detector).amplitude(t)
}

/// Arrival-time density p(t) = |φ(t)|².
pub fn arrival_density(packet: &GaussianPacket, detector: &DetectorSpec, t: f64) -> Result<f64> {
    Ok(arrival_amplitude(packet, detector, t)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[allow(clippy::excessive_precision, clippy::type_complexity)]
    // 40-digit mpmath convolution, see tests/oracles/reference_values.py
    const REFERENCE: &[(f64, f64, f64, f64, (f64, f64))] = &[
        (
            4.0,
            1.0,
            -8.0,
            2.0,
            (0.130_804_257_558_464_649_09, 0.310_387_196_728_128_804_17),
        ),
        (
            2.0,
            0.5,
            -8.0,
            2.0,
            (0.022_849_740_360_488_739_285, 0.041_407_746_585_453_876_007),
        ),
        (
            6.0,
            2.0,
            -8.0,
            2.0,
            (-0.034_750_766_219_272_857_502, -0.192_575_626_052_654_454_87),
        ),
        (
            1.0,
            1.3216,
            0.0,
            0.0,
            (0.460_433_682_933_346_155_88, 0.021_575_578_132_036_427_351),
        ),
        (
            10.0,
            1.3216,
            0.0,
            0.0,
            (0.072_560_162_418_137_568_246, -0.006_697_442_364_824_317_250_3),
        ),
    ];

    #[test]
    fn matches_high_precision_convolution() {
        for &(t, kappa, x0, v, (re, im)) in REFERENCE {
            let packet = GaussianPacket::new(x0, v).unwrap();
            let det = DetectorSpec::at_origin(kappa).unwrap();
            let phi = arrival_amplitude(&packet, &det, t).unwrap();
            assert!((phi - c(re, im)).norm() < 1e-8, "t={t} κ={kappa}: {phi}");
        }
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let packet = GaussianPacket::reference_setup();
        let det = DetectorSpec::at_origin(0.0).unwrap();
        for t in [0.0, 1.0, 4.0, 30.0] {
            assert_eq!(arrival_amplitude(&packet, &det, t).unwrap(), c(0.0, 0.0));
            assert_eq!(arrival_density(&packet, &det, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn initial_amplitude_is_free_value() {
        let packet = GaussianPacket::new(-1.0, 0.5).unwrap();
        let det = DetectorSpec::new(0.5, 2.0).unwrap();
        let phi = arrival_amplitude(&packet, &det, 0.0).unwrap();
        let free = super::super::free_packet_amplitude(&packet, 0.5, 0.0).unwrap();
        assert!((phi - 2f64.sqrt() * free).norm() < 1e-15);
    }

    #[test]
    fn density_nonnegative_on_fine_grid() {
        let solver = AmplitudeSolver::new(GaussianPacket::reference_setup(), DetectorSpec::at_origin(1.0).unwrap());
        for k in 0..1000 {
            let t = 0.02 * k as f64;
            assert!(solver.density(t).unwrap() >= 0.0);
        }
    }

    #[test]
    fn reflection_symmetric_density() {
        let det = DetectorSpec::new(0.7, 1.5).unwrap();
        let packet = GaussianPacket::new(-4.0, 1.3).unwrap();
        let mirror = packet.mirrored(det.position);
        for t in [0.5, 2.0, 3.7, 9.0, 40.0] {
            let p = arrival_density(&packet, &det, t).unwrap();
            let q = arrival_density(&mirror, &det, t).unwrap();
            assert!((p - q).abs() < 1e-10, "t={t}: {p} vs {q}");
        }
    }

    #[test]
    fn tight_tolerance_reports_failure() {
        let solver = AmplitudeSolver::new(GaussianPacket::reference_setup(), DetectorSpec::at_origin(1.0).unwrap())
            .with_tolerance(1e-30);
        assert!(matches!(
            solver.amplitude(5.0),
            Err(Error::QuadratureNotConverged { .. })
        ));
    }
}
