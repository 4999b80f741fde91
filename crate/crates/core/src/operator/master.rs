use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::model::{CoupledState, QuantumModel};
use crate::error::{invalid, Error, Result};

const MAX_STEPS: usize = 1_000_000;

// Dormand–Prince 5(4) tableau; the right-hand side is autonomous, so the
// nodes c_i are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Both branches stacked as (ρ₀, ρ₁).
#[derive(Clone)]
struct Pair(DMatrix<Complex64>, DMatrix<Complex64>);

impl Pair {
    fn axpy(&self, h: f64, k: &Pair) -> Pair {
        let s = Complex64::new(h, 0.0);
        Pair(&self.0 + &k.0 * s, &self.1 + &k.1 * s)
    }

    fn trace(&self) -> f64 {
        self.0.trace().re + self.1.trace().re
    }
}

struct Rhs {
    h: DMatrix<Complex64>,
    u: DVector<Complex64>,
    kappa: f64,
}

impl Rhs {
    /// ρ̇₁ = -i[H,ρ₁] - ½{F²,ρ₁},  ρ̇₀ = -i[H,ρ₀] + Fρ₁F.
    fn eval(&self, y: &Pair) -> Pair {
        let mi = Complex64::new(0.0, -1.0);
        let commutator = |r: &DMatrix<Complex64>| (&self.h * r - r * &self.h) * mi;
        let u_adj = self.u.adjoint();
        let left = &self.u * (&u_adj * &y.1);
        let right = (&y.1 * &self.u) * &u_adj;
        let damping = (left + right) * Complex64::new(0.5 * self.kappa, 0.0);
        let jump_weight = (&u_adj * &y.1 * &self.u)[(0, 0)] * self.kappa;
        let jump = &self.u * &u_adj * jump_weight;
        Pair(commutator(&y.0) + jump, commutator(&y.1) - damping)
    }
}

/// Integrates the coupled master equation from `state` over a time span
/// `t` with an adaptive Dormand–Prince 5(4) pair.
///
/// `tol` is the per-step local error tolerance (mixed absolute/relative).
/// After every accepted step the total trace is compared with its initial
/// value; a drift beyond `tol` aborts with [`Error::TraceDefect`].
pub fn master_evolve(model: &QuantumModel, state: &CoupledState, t: f64, tol: f64) -> Result<CoupledState> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = model.dim();
    if state.rho1.nrows() != n {
        return Err(invalid("state dimension does not match model"));
    }
    state.validate(1e-8_f64.max(tol))?;
    let rhs = Rhs {
        h: model.hamiltonian().to_dense(),
        u: model.u().clone(),
        kappa: model.kappa(),
    };
    let mut y = Pair(state.rho0.clone(), state.rho1.clone());
    let trace0 = y.trace();
    let mut time = 0.0;
    let scale = model.generator_norm_bound().max(1e-3);
    let mut h = (0.1 / scale).min(t.max(f64::MIN_POSITIVE));
    let mut k1 = rhs.eval(&y);
    let mut steps = 0;
    while time < t {
        if steps >= MAX_STEPS {
            return Err(Error::StepUnderflow { t: time, step: h });
        }
        steps += 1;
        let last = time + h >= t;
        if last {
            h = t - time;
        }
        let mut ks: Vec<Pair> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for row in A.iter().skip(1) {
            let mut stage = y.clone();
            // ks holds exactly the stages this row depends on
            for (&a, kj) in row.iter().zip(&ks) {
                if a != 0.0 {
                    stage = stage.axpy(h * a, kj);
                }
            }
            ks.push(rhs.eval(&stage));
        }
        let mut y5 = y.clone();
        let mut diff = Pair(DMatrix::zeros(n, n), DMatrix::zeros(n, n));
        for i in 0..7 {
            if B5[i] != 0.0 {
                y5 = y5.axpy(h * B5[i], &ks[i]);
            }
            diff = diff.axpy(h * (B5[i] - B4[i]), &ks[i]);
        }
        let err = error_norm(&diff, &y, &y5, tol);
        if err <= 1.0 {
            time = if last { t } else { time + h };
            y = y5;
            // FSAL: the last stage is f(y_{n+1})
            k1 = ks.swap_remove(6);
            let defect = (y.trace() - trace0).abs();
            if defect > tol.max(1e-12) {
                return Err(Error::TraceDefect { t: time, defect });
            }
            if last {
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * time.max(1.0) {
            return Err(Error::StepUnderflow { t: time, step: h });
        }
    }
    let sym = |m: &DMatrix<Complex64>| (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CoupledState {
        rho0: sym(&y.0),
        rho1: sym(&y.1),
    })
}

fn error_norm(diff: &Pair, y: &Pair, y5: &Pair, tol: f64) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (d, (a, b)) in [(&diff.0, (&y.0, &y5.0)), (&diff.1, (&y.1, &y5.1))] {
        for ((e, x), z) in d.iter().zip(a.iter()).zip(b.iter()) {
            let sc = tol * (1.0 + x.norm().max(z.norm()));
            acc += (e.norm() / sc).powi(2);
            count += 1;
        }
    }
    (acc / count as f64).sqrt()
}
