//! Faddeeva function w(z) = e^{-z²} erfc(-iz) and the memory kernel built on it.
//!
//! Reference evaluation in the upper half-plane is split into three regions:
//!
//! * `|z| <= 2`: Maclaurin series `Σ (iz)^n / Γ(n/2 + 1)`;
//! * `Im z >= 2.5` or `|Re z| >= 6`: Laplace continued fraction (modified Lentz);
//! * the band in between: a Taylor integration of `w' = -2zw + 2i/√π`
//!   started from a continued-fraction anchor at `Im z = 2.5`. Stepping
//!   downwards shrinks the homogeneous `e^{-z²}` component, so the march is
//!   stable.
//!
//! These are accurate but comparatively slow, so inside the square
//! `[0, 8)²` they are only used once, to fill a table of anchors spaced ½
//! apart; a call then takes one short Taylor step of the same ODE from the
//! nearest anchor. Outside the square the continued fraction converges in a
//! few dozen terms and is used directly. Negative real parts use
//! `w(-z̄) = conj w(z)`, the lower half-plane `w(z) = 2e^{-z²} - w(-z)`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub(crate) const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SERIES_RADIUS: f64 = 2.0;
const CF_MIN_IM: f64 = 2.5;
const CF_MIN_RE: f64 = 6.0;
const MAX_EXP_ARG: f64 = 708.0;
const TABLE_STEP: f64 = 0.5;
const TABLE_EXTENT: f64 = 8.0;
const TABLE_SIDE: usize = 17;

/// w(z) = e^{-z²} erfc(-iz).
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(invalid(format!("faddeeva argument must be finite, got {z}")));
    }
    if z.im >= 0.0 {
        return Ok(upper_half_plane(z));
    }
    // w(z) = 2 e^{-z²} - w(-z)
    let minus_z_sq = -(z * z);
    if minus_z_sq.re > MAX_EXP_ARG {
        return Err(Error::Overflow { z });
    }
    Ok(2.0 * minus_z_sq.exp() - upper_half_plane(-z))
}

/// Memory kernel f(t) = e^{ε²t} erfc(ε√t), evaluated as w(iε√t).
///
/// For Re ε > 0 the argument iε√t stays in the upper half-plane, so no
/// cancellation occurs for any t.
pub fn erfc_scaled_ray(epsilon: Complex64, t: f64) -> Result<Complex64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if epsilon.re < 0.0 {
        return Err(invalid(format!("kernel parameter needs Re ε >= 0, got {epsilon}")));
    }
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    faddeeva(Complex64::i() * epsilon * t.sqrt())
}

fn upper_half_plane(z: Complex64) -> Complex64 {
    let (x, y) = (z.re.abs(), z.im);
    let w = if x < TABLE_EXTENT && y < TABLE_EXTENT {
        // w(-x + iy) = conj w(x + iy)
        let w = tabulated(Complex64::new(x, y));
        if z.re < 0.0 {
            w.conj()
        } else {
            w
        }
    } else {
        continued_fraction(z)
    };
    // The real axis carries exact symmetry Re w(x) = e^{-x²}.
    if y == 0.0 {
        Complex64::new((-z.re * z.re).exp(), w.im)
    } else {
        w
    }
}

/// Reference evaluation in the closed upper half-plane by region: series,
/// continued fraction, or an ODE march down from the continued-fraction
/// region. Used to build the anchor table and in tests.
pub(crate) fn direct_upper(z: Complex64) -> Complex64 {
    let (x, y) = (z.re.abs(), z.im);
    if z.norm() <= SERIES_RADIUS {
        maclaurin(z)
    } else if y >= CF_MIN_IM || x >= CF_MIN_RE {
        continued_fraction(z)
    } else {
        march_from_anchor(z)
    }
}

/// Anchor values of w on the lattice {0, ½, 1, …}² covering [0, 8)².
fn anchor_table() -> &'static [Complex64] {
    static TABLE: OnceLock<Vec<Complex64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut values = Vec::with_capacity(TABLE_SIDE * TABLE_SIDE);
        for i in 0..TABLE_SIDE {
            for j in 0..TABLE_SIDE {
                let z = Complex64::new(i as f64 * TABLE_STEP, j as f64 * TABLE_STEP);
                let w = direct_upper(z);
                values.push(if j == 0 {
                    Complex64::new((-z.re * z.re).exp(), w.im)
                } else {
                    w
                });
            }
        }
        values
    })
}

/// w(z) for 0 ≤ Re z, Im z < 8 by a Taylor step of the ODE from the
/// nearest anchor (|h| ≤ 0.36).
fn tabulated(z: Complex64) -> Complex64 {
    let i = (z.re / TABLE_STEP).round() as usize;
    let j = (z.im / TABLE_STEP).round() as usize;
    let anchor = Complex64::new(i as f64 * TABLE_STEP, j as f64 * TABLE_STEP);
    let w0 = anchor_table()[i * TABLE_SIDE + j];
    let h = z - anchor;
    if h == Complex64::new(0.0, 0.0) {
        return w0;
    }
    taylor_step(anchor, w0, h)
}

pub(crate) fn maclaurin(z: Complex64) -> Complex64 {
    let iz = Complex64::i() * z;
    let iz2 = iz * iz;
    let mut even = Complex64::new(1.0, 0.0);
    let mut odd = iz * (2.0 * FRAC_1_SQRT_PI);
    let mut sum = even + odd;
    let mut n = 1u32;
    loop {
        n += 2;
        even *= iz2 / (0.5 * (n - 1) as f64);
        odd *= iz2 / (0.5 * n as f64);
        let delta = even + odd;
        sum += delta;
        if n as f64 > 2.0 * z.norm_sqr() && delta.norm() <= 1e-17 * sum.norm() {
            break;
        }
        if n > 2000 {
            break;
        }
    }
    sum
}

pub(crate) fn continued_fraction(z: Complex64) -> Complex64 {
    // g = z - (1/2)/(z - (2/2)/(z - (3/2)/(z - ...))), w = i / (√π g)
    const TINY: f64 = 1e-300;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = if z.norm() == 0.0 { tiny } else { z };
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..20_000u32 {
        let a = -0.5 * k as f64;
        d = z + a * d;
        if d.l1_norm() < TINY {
            d = tiny;
        }
        c = z + a / c;
        if c.l1_norm() < TINY {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm_sqr() < 1.6e-31 {
            break;
        }
    }
    Complex64::i() * FRAC_1_SQRT_PI / f
}

pub(crate) fn march_from_anchor(z: Complex64) -> Complex64 {
    let anchor = Complex64::new(z.re, CF_MIN_IM);
    let mut w = continued_fraction(anchor);
    let drop = CF_MIN_IM - z.im;
    let steps = (drop / 0.4).ceil().max(1.0) as usize;
    let h = Complex64::new(0.0, -drop / steps as f64);
    let mut at = anchor;
    for _ in 0..steps {
        w = taylor_step(at, w, h);
        at += h;
    }
    w
}

/// Advances w from `z0` to `z0 + h` with the Taylor series of the ODE
/// w' = -2zw + 2i/√π.
fn taylor_step(z0: Complex64, w0: Complex64, h: Complex64) -> Complex64 {
    let source = Complex64::new(0.0, 2.0 * FRAC_1_SQRT_PI);
    let mut prev = w0;
    let mut cur = -2.0 * z0 * w0 + source;
    let mut hk = h;
    let mut sum = w0 + cur * h;
    for k in 1..80u32 {
        // (k+1) c_{k+1} = -2 z0 c_k - 2 c_{k-1}
        let next = (-2.0 * z0 * cur - 2.0 * prev) / (k + 1) as f64;
        hk *= h;
        let term = next * hk;
        sum += term;
        prev = cur;
        cur = next;
        if k > 4 && term.norm_sqr() <= 1e-34 * sum.norm_sqr() {
            break;
        }
    }
    sum
}
