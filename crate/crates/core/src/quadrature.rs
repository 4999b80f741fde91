//! Gauss–Legendre rules and composite panel integration.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 16-point rule used by the amplitude and density integrators.
    pub fn sixteen() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Shared 10-point rule.
    pub fn ten() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10))
    }

    /// Maps the rule onto [a, b], yielding (abscissa, weight) pairs.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate_complex<F>(&self, a: f64, b: f64, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        self.on(a, b).map(|(x, w)| f(x) * w).sum()
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.on(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// 15-point Gauss–Kronrod rule with its embedded 7-point Gauss rule.
pub struct GaussKronrod15;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

impl GaussKronrod15 {
    /// Abscissae on [a, b] in ascending order.
    pub fn abscissae(a: f64, b: f64) -> [f64; 15] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut x = [0.0; 15];
        for j in 0..7 {
            x[j] = mid - half * XGK[j];
            x[14 - j] = mid + half * XGK[j];
        }
        x[7] = mid;
        x
    }

    /// Kronrod estimate and |Kronrod - Gauss| for samples taken at
    /// [`Self::abscissae`].
    pub fn combine(a: f64, b: f64, f: &[f64; 15]) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mut kronrod = WGK[7] * f[7];
        let mut gauss = WG[3] * f[7];
        for j in 0..7 {
            let pair = f[j] + f[14 - j];
            kronrod += WGK[j] * pair;
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        (kronrod * half, ((kronrod - gauss) * half).abs())
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints 0, w, 2w, 4w, ... capped at `end`; always includes `end`.
pub fn graded_breakpoints(first_width: f64, end: f64) -> Vec<f64> {
    let mut points = vec![0.0];
    if end <= 0.0 {
        return points;
    }
    let mut width = first_width.min(end);
    let mut x = 0.0;
    while x + width < end * (1.0 - 1e-12) {
        x += width;
        points.push(x);
        width *= 2.0;
    }
    points.push(end);
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 10, 16, 40] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(10);
        // degree 19 is integrated exactly
        let got = rule.integrate(0.0, 2.0, |x| x.powi(19));
        let exact = 2f64.powi(20) / 20.0;
        assert!((got - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn sixteen_point_exponential() {
        let got = GaussLegendre::sixteen().integrate(0.0, 1.0, f64::exp);
        assert!((got - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn kronrod_integrates_smooth_function() {
        let x = GaussKronrod15::abscissae(0.0, 2.0);
        let f = x.map(|t| (-t).exp() * t.sin());
        let (value, err) = GaussKronrod15::combine(0.0, 2.0, &f);
        let exact = 0.5 * (1.0 - (-2.0f64).exp() * (2f64.sin() + 2f64.cos()));
        assert!((value - exact).abs() < 1e-14);
        assert!(err < 1e-8);
        // weights integrate a constant exactly
        let (one, _) = GaussKronrod15::combine(-1.0, 1.0, &[1.0; 15]);
        assert!((one - 2.0).abs() < 1e-15);
    }

    #[test]
    fn graded_points_cover_interval() {
        let p = graded_breakpoints(1.0, 10.0);
        assert_eq!(p, vec![0.0, 1.0, 3.0, 7.0, 10.0]);
        assert_eq!(graded_breakpoints(5.0, 2.0), vec![0.0, 2.0]);
    }
}
