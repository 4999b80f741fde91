use nalgebra::DVector;
use num_complex::Complex64;

use super::model::{Hamiltonian, QuantumModel};
use crate::analytic::{DetectorSpec, GaussianPacket};
use crate::error::{invalid, Error, Result};

/// Minimum clearance, in packet widths, between the initial packet and the
/// grid ends.
const CLEARANCE: f64 = 6.0;
/// Spread of the momentum distribution counted as "fast" components.
const MOMENTUM_REACH: f64 = 3.0;

/// Uniform position grid x_j = x_min + j Δx, j = 0..n, with Dirichlet
/// walls beyond both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(format!("bad line grid [{x_min}, {x_max}] with dx {dx}")));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        if n < 3 {
            return Err(invalid("line grid needs at least three nodes"));
        }
        Ok(Self { x_min, dx, n })
    }

    /// Grid containing the detector as a node and wide enough that no
    /// component moving faster than |v| + 3 can reflect off a wall and
    /// return to the detector before `horizon`.
    pub fn covering(packet: &GaussianPacket, det: &DetectorSpec, horizon: f64, dx: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(invalid(format!("horizon must be >= 0, got {horizon}")));
        }
        let (x0, a) = (packet.x0, det.position);
        let left_speed = (MOMENTUM_REACH - packet.v).max(0.0);
        let right_speed = (MOMENTUM_REACH + packet.v).max(0.0);
        let margin = CLEARANCE + 4.0;
        let left = (0.5 * (x0 + a - left_speed * horizon) - margin).min(x0.min(a) - margin);
        let right = (0.5 * (x0 + a + right_speed * horizon) + margin).max(x0.max(a) + margin);
        let below = ((a - left) / dx).ceil();
        let above = ((right - a) / dx).ceil();
        Self::new(a - below * dx, a + above * dx, dx)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Index of the node at `position`, if it is one.
    pub fn node_of(&self, position: f64) -> Result<usize> {
        let k = (position - self.x_min) / self.dx;
        let j = k.round();
        if j < 0.0 || j as usize >= self.n || (k - j).abs() > 1e-9 {
            return Err(Error::OffGrid { position });
        }
        Ok(j as usize)
    }
}

/// Finite-difference model of the free line with a point detector.
///
/// H is the 3-point Laplacian -½ d²/dx² with Dirichlet walls; the
/// sensitive state is the unit vector at the detector node and the
/// coupling becomes κ_eff = κ/Δx, the lattice form of κ δ(x - a). The state
/// vector holds ψ(x_j)√Δx, so p(t) = κ_eff |ψ_j|² approximates κ |ψ(a)|².
pub fn discretized_line_model(grid: &LineGrid, packet: &GaussianPacket, det: &DetectorSpec) -> Result<QuantumModel> {
    let node = grid.node_of(det.position)?;
    if packet.x0 - CLEARANCE < grid.x_min || packet.x0 + CLEARANCE > grid.x_max() {
        return Err(invalid(format!(
            "packet at {} is closer than {CLEARANCE} widths to the grid ends",
            packet.x0
        )));
    }
    let inv = 1.0 / (grid.dx * grid.dx);
    let hamiltonian = Hamiltonian::Tridiagonal {
        diag: vec![inv; grid.n],
        off: vec![-0.5 * inv; grid.n - 1],
    };
    let mut u = DVector::zeros(grid.n);
    u[node] = Complex64::new(1.0, 0.0);
    let root = grid.dx.sqrt();
    let psi = DVector::from_fn(grid.n, |j, _| packet.amplitude_unchecked(grid.x(j), 0.0) * root);
    let norm = psi.norm();
    QuantumModel::new(hamiltonian, u, det.kappa() / grid.dx, psi / Complex64::new(norm, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::arrival_density;
    use crate::operator::{detection_probability, rate_series};

    #[test]
    fn detector_must_be_a_node() {
        let grid = LineGrid::new(-20.0, 20.0, 0.1).unwrap();
        let packet = GaussianPacket::new(-8.0, 2.0).unwrap();
        let det = DetectorSpec::new(0.05, 1.0).unwrap();
        assert!(matches!(
            discretized_line_model(&grid, &packet, &det),
            Err(Error::OffGrid { .. })
        ));
        let near_edge = GaussianPacket::new(-17.0, 2.0).unwrap();
        assert!(discretized_line_model(&grid, &near_edge, &DetectorSpec::at_origin(1.0).unwrap()).is_err());
    }

    #[test]
    fn sampled_state_is_normalised_and_free_evolution_conserves_norm() {
        let packet = GaussianPacket::reference_setup();
        let det = DetectorSpec::at_origin(0.0).unwrap();
        let grid = LineGrid::covering(&packet, &det, 5.0, 0.1).unwrap();
        assert!(grid.node_of(0.0).is_ok());
        let model = discretized_line_model(&grid, &packet, &det).unwrap();
        assert!((model.psi0().norm() - 1.0).abs() < 1e-14);
        assert!(detection_probability(&model, 5.0).unwrap() < 1e-12);
    }

    #[test]
    fn refinement_approaches_closed_form() {
        let packet = GaussianPacket::reference_setup();
        let det = DetectorSpec::at_origin(1.0).unwrap();
        let times: Vec<f64> = (0..=60).map(|k| 0.1 * k as f64).collect();
        let exact: Vec<f64> = times
            .iter()
            .map(|&t| arrival_density(&packet, &det, t).unwrap())
            .collect();
        let mut errors = Vec::new();
        for dx in [0.1, 0.05] {
            let grid = LineGrid::covering(&packet, &det, 6.0, dx).unwrap();
            let model = discretized_line_model(&grid, &packet, &det).unwrap();
            let series = rate_series(&model, &times).unwrap();
            let err: f64 = series
                .density
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs() * 0.1)
                .sum();
            errors.push(err);
        }
        assert!(errors[1] < errors[0], "{errors:?}");
        assert!(errors[1] < 2e-2, "{errors:?}");
    }
}
