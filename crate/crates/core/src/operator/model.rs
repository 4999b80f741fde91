use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;

/// Hamiltonian storage: dense for small models, real symmetric tridiagonal
/// for finite-difference line models.
#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    Dense(DMatrix<Complex64>),
    Tridiagonal { diag: Vec<f64>, off: Vec<f64> },
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(h) => h.nrows(),
            Self::Tridiagonal { diag, .. } => diag.len(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            Self::Dense(h) => h.clone(),
            Self::Tridiagonal { diag, off } => {
                let n = diag.len();
                DMatrix::from_fn(n, n, |i, j| {
                    let v = if i == j {
                        diag[i]
                    } else if i + 1 == j {
                        off[i]
                    } else if j + 1 == i {
                        off[j]
                    } else {
                        0.0
                    };
                    Complex64::new(v, 0.0)
                })
            }
        }
    }

    /// H v.
    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            Self::Dense(h) => h * v,
            Self::Tridiagonal { diag, off } => {
                let n = diag.len();
                DVector::from_fn(n, |i, _| {
                    let mut acc = v[i] * diag[i];
                    if i > 0 {
                        acc += v[i - 1] * off[i - 1];
                    }
                    if i + 1 < n {
                        acc += v[i + 1] * off[i];
                    }
                    acc
                })
            }
        }
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        match self {
            Self::Dense(h) => (0..h.ncols())
                .map(|j| h.column(j).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            Self::Tridiagonal { diag, off } => {
                let n = diag.len();
                (0..n)
                    .map(|j| {
                        let mut s = diag[j].abs();
                        if j > 0 {
                            s += off[j - 1].abs();
                        }
                        if j + 1 < n {
                            s += off[j].abs();
                        }
                        s
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Finite-dimensional system with Hamiltonian H, sensitive state |u⟩ and
/// coupling κ; the detector operator is F = √κ |u⟩⟨u|.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    hamiltonian: Hamiltonian,
    u: DVector<Complex64>,
    kappa: f64,
    psi0: DVector<Complex64>,
}

impl QuantumModel {
    pub fn new(hamiltonian: Hamiltonian, u: DVector<Complex64>, kappa: f64, psi0: DVector<Complex64>) -> Result<Self> {
        let dim = hamiltonian.dim();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if u.len() != dim || psi0.len() != dim {
            return Err(Error::InvalidModel(format!(
                "vector lengths {} and {} do not match dimension {dim}",
                u.len(),
                psi0.len()
            )));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidModel(format!("coupling must be >= 0, got {kappa}")));
        }
        for (name, v) in [("u", &u), ("psi0", &psi0)] {
            let norm = v.norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidModel(format!(
                    "{name} must be a unit vector, norm {norm}"
                )));
            }
        }
        match &hamiltonian {
            Hamiltonian::Dense(h) => {
                if !h.is_square() {
                    return Err(Error::InvalidModel("Hamiltonian must be square".into()));
                }
                let defect = (h - h.adjoint()).norm();
                if defect > HERMITIAN_TOL * h.norm().max(1.0) {
                    return Err(Error::InvalidModel(format!(
                        "Hamiltonian not Hermitian (defect {defect:.3e})"
                    )));
                }
            }
            Hamiltonian::Tridiagonal { diag, off } => {
                if off.len() + 1 != diag.len() {
                    return Err(Error::InvalidModel("tridiagonal off-diagonal has wrong length".into()));
                }
                if diag.iter().chain(off).any(|x| !x.is_finite()) {
                    return Err(Error::InvalidModel("Hamiltonian entries must be finite".into()));
                }
            }
        }
        Ok(Self {
            hamiltonian,
            u,
            kappa,
            psi0,
        })
    }

    /// Random model with a Hermitian H of entries in [-1, 1], random unit
    /// u and ψ₀; used by the conservation tests.
    pub fn random<R: Rng + ?Sized>(dim: usize, kappa: f64, rng: &mut R) -> Result<Self> {
        let mut sample = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = DMatrix::from_fn(dim, dim, |_, _| sample());
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let u = DVector::from_fn(dim, |_, _| sample()).normalize();
        let psi0 = DVector::from_fn(dim, |_, _| sample()).normalize();
        Self::new(Hamiltonian::Dense(h), u, kappa, psi0)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn u(&self) -> &DVector<Complex64> {
        &self.u
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn psi0(&self) -> &DVector<Complex64> {
        &self.psi0
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), self.u.clone(), kappa, self.psi0.clone())
    }

    pub fn with_psi0(&self, psi0: DVector<Complex64>) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), self.u.clone(), self.kappa, psi0)
    }

    /// F² = κ |u⟩⟨u|.
    pub fn detector_operator_squared(&self) -> DMatrix<Complex64> {
        &self.u * self.u.adjoint() * Complex64::new(self.kappa, 0.0)
    }

    /// Generator A = -iH - F²/2 of the damped propagator K(t) = e^{At}.
    pub fn generator(&self) -> DMatrix<Complex64> {
        self.hamiltonian.to_dense() * Complex64::new(0.0, -1.0)
            - self.detector_operator_squared() * Complex64::new(0.5, 0.0)
    }

    /// A v without forming A.
    pub fn apply_generator(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let overlap = self.u.dotc(v);
        self.hamiltonian.apply(v) * Complex64::new(0.0, -1.0) - &self.u * (overlap * (0.5 * self.kappa))
    }

    /// Upper bound on the induced 1-norm of the generator.
    pub fn generator_norm_bound(&self) -> f64 {
        let u_col = self.u.iter().map(|z| z.norm()).sum::<f64>();
        let u_max = self.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.hamiltonian.norm1() + 0.5 * self.kappa * u_col * u_max
    }

    /// Detection rate for a damped state: κ |⟨u|φ⟩|².
    pub fn flux(&self, phi: &DVector<Complex64>) -> f64 {
        self.kappa * self.u.dotc(phi).norm_sqr()
    }
}

/// The two branches of the coupled system: detector fired (ρ₀) and not yet
/// fired (ρ₁).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub rho0: DMatrix<Complex64>,
    pub rho1: DMatrix<Complex64>,
}

impl CoupledState {
    /// ρ₁ = |ψ⟩⟨ψ|, ρ₀ = 0.
    pub fn initial(psi: &DVector<Complex64>) -> Self {
        let n = psi.len();
        Self {
            rho0: DMatrix::zeros(n, n),
            rho1: psi * psi.adjoint(),
        }
    }

    pub fn trace0(&self) -> f64 {
        self.rho0.trace().re
    }

    pub fn trace1(&self) -> f64 {
        self.rho1.trace().re
    }

    pub fn total_trace(&self) -> f64 {
        self.trace0() + self.trace1()
    }

    /// Smallest eigenvalue over both branches.
    pub fn min_eigenvalue(&self) -> f64 {
        let lowest = |m: &DMatrix<Complex64>| {
            let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
            herm.symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        };
        lowest(&self.rho0).min(lowest(&self.rho1))
    }

    pub(crate) fn validate(&self, tol: f64) -> Result<()> {
        let n = self.rho1.nrows();
        if !self.rho1.is_square() || self.rho0.shape() != (n, n) {
            return Err(Error::InvalidModel(
                "coupled state blocks must be square and equal".into(),
            ));
        }
        let total = self.total_trace();
        if (total - 1.0).abs() > tol.max(1e-10) {
            return Err(Error::InvalidModel(format!("total trace {total} differs from 1")));
        }
        for m in [&self.rho0, &self.rho1] {
            if (m - m.adjoint()).norm() > tol.max(1e-10) {
                return Err(Error::InvalidModel("coupled state blocks must be Hermitian".into()));
            }
        }
        if self.min_eigenvalue() < -tol.max(1e-10) {
            return Err(Error::InvalidModel("coupled state blocks must be positive".into()));
        }
        Ok(())
    }
}
