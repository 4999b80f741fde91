//! Split-step Fourier evolution of the packet with a point sink.
//!
//! The wave function lives on a periodic grid. Each step applies half a
//! sink step, an exact kinetic step in momentum space, and the other half
//! sink step (Strang splitting). The sink is the lattice form of the
//! imaginary potential -iκδ(x - a)/2: the detector-node amplitude is
//! multiplied by exp(-κ dt/(4Δx)) per half step.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::analytic::{DetectorSpec, GaussianPacket};
use crate::error::{invalid, Error, Result};

/// Default box: 256 natural units, 4096 nodes, dt = 1e-3.
pub const DEFAULT_WIDTH: f64 = 256.0;
pub const DEFAULT_NODES: usize = 4096;
pub const DEFAULT_DT: f64 = 1e-3;

/// Probability allowed within three nodes of the box ends.
pub const BOUNDARY_THRESHOLD: f64 = 1e-6;
const CLEARANCE: f64 = 6.0;

/// Periodic grid x_j = x_min + jΔx, Δx = (x_max - x_min)/n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dt: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize, dt: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(format!("grid bounds [{x_min}, {x_max}] are invalid")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid(format!("node count must be a power of two >= 8, got {n}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let grid = Self { x_min, x_max, n, dt };
        let phase = grid.nyquist_phase();
        if phase >= PI {
            return Err(invalid(format!(
                "dt = {dt} too large: Nyquist kinetic phase {phase:.3} >= π"
            )));
        }
        Ok(grid)
    }

    /// Box of the given width and node count, placed so that `a` is a node
    /// and the packet sits in the left part of the box with room to move.
    pub fn centered(packet: &GaussianPacket, det: &DetectorSpec, width: f64, n: usize, dt: f64) -> Result<Self> {
        let dx = width / n as f64;
        let mid = 0.5 * (packet.x0 + det.position);
        let below = ((det.position - (mid - 0.5 * width)) / dx).round();
        let x_min = det.position - below * dx;
        Self::new(x_min, x_min + width, n, dt)
    }

    /// Default resolution around the packet and detector.
    pub fn default_for(packet: &GaussianPacket, det: &DetectorSpec) -> Result<Self> {
        Self::centered(packet, det, DEFAULT_WIDTH, DEFAULT_NODES, DEFAULT_DT)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    /// Kinetic phase k²dt/2 of the highest resolved mode.
    pub fn nyquist_phase(&self) -> f64 {
        let k = PI / self.dx();
        0.5 * k * k * self.dt
    }

    pub fn node_of(&self, position: f64) -> Result<usize> {
        let k = (position - self.x_min) / self.dx();
        let j = k.round();
        if j < 0.0 || j as usize >= self.n || (k - j).abs() > 1e-9 {
            return Err(Error::OffGrid { position });
        }
        Ok(j as usize)
    }

    fn check_packet(&self, packet: &GaussianPacket) -> Result<()> {
        if packet.x0 - CLEARANCE < self.x_min || packet.x0 + CLEARANCE > self.x_max {
            return Err(invalid(format!(
                "packet at {} is closer than {CLEARANCE} widths to the box ends",
                packet.x0
            )));
        }
        Ok(())
    }

    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let width = self.x_max - self.x_min;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / width
            })
            .collect()
    }
}

/// Survival series of a sink run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkRun {
    pub grid: Grid,
    pub times: Vec<f64>,
    /// ‖ψ(t)‖² after each step.
    pub survival: Vec<f64>,
    /// -dS/dt by central differences (one-sided at the ends).
    pub density: Vec<f64>,
    /// ψ(x_j, t_final).
    pub final_state: Vec<Complex64>,
    /// Largest probability found within three nodes of the box ends.
    pub max_boundary_probability: f64,
    /// False when the boundary probability exceeded the threshold.
    pub valid: bool,
}

impl SinkRun {
    /// 1 - S(t_final).
    pub fn detected(&self) -> f64 {
        1.0 - self.survival.last().copied().unwrap_or(1.0)
    }

    /// Density interpolated linearly at `t`.
    pub fn density_at(&self, t: f64) -> f64 {
        let dt = self.grid.dt;
        let k = (t / dt).floor();
        if k < 0.0 {
            return self.density[0];
        }
        let i = k as usize;
        if i + 1 >= self.density.len() {
            return *self.density.last().unwrap_or(&0.0);
        }
        let frac = t / dt - k;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }

    /// Writes `t, survival, density` rows (every `every`-th step) under a column header.
    pub fn write_csv<W: Write>(&self, mut out: W, every: usize) -> std::io::Result<()> {
        writeln!(out, "t,survival,density")?;
        let every = every.max(1);
        for i in (0..self.times.len()).step_by(every) {
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e}",
                self.times[i], self.survival[i], self.density[i]
            )?;
        }
        Ok(())
    }
}

struct Stepper {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kinetic: Vec<Complex64>,
    scratch: Vec<Complex64>,
    node: usize,
    sink_half: f64,
}

impl Stepper {
    fn new(grid: &Grid, node: usize, kappa: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let scale = 1.0 / grid.n as f64;
        let kinetic = grid
            .wavenumbers()
            .into_iter()
            .map(|k| Complex64::from_polar(scale, -0.5 * k * k * grid.dt))
            .collect();
        let scratch =
            vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self {
            forward,
            inverse,
            kinetic,
            scratch,
            node,
            sink_half: (-kappa * grid.dt / (4.0 * grid.dx())).exp(),
        }
    }

    fn step(&mut self, psi: &mut [Complex64]) {
        psi[self.node] *= self.sink_half;
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        psi[self.node] *= self.sink_half;
    }
}

fn initial_state(grid: &Grid, packet: &GaussianPacket) -> Vec<Complex64> {
    (0..grid.n)
        .map(|j| packet.amplitude_unchecked(grid.x(j), 0.0))
        .collect()
}

fn norm_sqr(psi: &[Complex64], dx: f64) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

fn boundary_probability(psi: &[Complex64], dx: f64) -> f64 {
    let n = psi.len();
    let edge: f64 = psi[..3].iter().chain(&psi[n - 3..]).map(|z| z.norm_sqr()).sum();
    edge * dx
}

/// Evolves the packet with the point sink up to `t_final`.
///
/// The run is flagged invalid (not rejected) when more than
/// [`BOUNDARY_THRESHOLD`] probability reaches the box ends, since the
/// periodic wrap-around would then feed back onto the detector.
pub fn evolve_with_sink(grid: &Grid, packet: &GaussianPacket, det: &DetectorSpec, t_final: f64) -> Result<SinkRun> {
    let (run, _) = run_sink(grid, packet, det, t_final)?;
    Ok(run)
}

fn run_sink(
    grid: &Grid,
    packet: &GaussianPacket,
    det: &DetectorSpec,
    t_final: f64,
) -> Result<(SinkRun, Vec<Complex64>)> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::NegativeTime(t_final));
    }
    grid.check_packet(packet)?;
    let node = grid.node_of(det.position)?;
    let dx = grid.dx();
    let steps = (t_final / grid.dt).round() as usize;
    let mut psi = initial_state(grid, packet);
    let norm0 = norm_sqr(&psi, dx);
    let renorm = 1.0 / norm0.sqrt();
    psi.iter_mut().for_each(|z| *z *= renorm);

    let mut stepper = Stepper::new(grid, node, det.kappa());
    let mut times = Vec::with_capacity(steps + 1);
    let mut survival = Vec::with_capacity(steps + 1);
    times.push(0.0);
    survival.push(norm_sqr(&psi, dx));
    let mut max_boundary = boundary_probability(&psi, dx);
    for k in 1..=steps {
        stepper.step(&mut psi);
        times.push(k as f64 * grid.dt);
        survival.push(norm_sqr(&psi, dx));
        max_boundary = max_boundary.max(boundary_probability(&psi, dx));
    }
    let density = differentiate(&survival, grid.dt);
    let run = SinkRun {
        grid: *grid,
        times,
        survival,
        density,
        final_state: psi.clone(),
        max_boundary_probability: max_boundary,
        valid: max_boundary <= BOUNDARY_THRESHOLD,
    };
    Ok((run, psi))
}

fn differentiate(series: &[f64], dt: f64) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (series[0] - series[1]) / dt
            } else if i == n - 1 {
                (series[n - 2] - series[n - 1]) / dt
            } else {
                (series[i - 1] - series[i + 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Result of [`back_action_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackAction {
    /// Renormalised wave function of the undetected particle.
    pub undetected_state: Vec<Complex64>,
    /// 1 - |⟨ψ_free(t)|ψ_surviving(t)⟩|².
    pub overlap_deficit: f64,
    pub survival: f64,
}

/// Compares the undetected branch with free evolution on the same grid.
pub fn back_action_probe(grid: &Grid, packet: &GaussianPacket, det: &DetectorSpec, t_final: f64) -> Result<BackAction> {
    let (run, damped) = run_sink(grid, packet, det, t_final)?;
    let dx = grid.dx();
    let survival = norm_sqr(&damped, dx);
    if survival < 1e-12 {
        return Err(Error::StateExhausted { t: t_final, survival });
    }
    let scale = 1.0 / survival.sqrt();
    let undetected_state: Vec<Complex64> = damped.iter().map(|z| z * scale).collect();
    if det.kappa() == 0.0 {
        // Same propagation as the free reference, so the rays coincide.
        return Ok(BackAction {
            undetected_state,
            overlap_deficit: 0.0,
            survival: run.survival[run.survival.len() - 1],
        });
    }
    let free_det = DetectorSpec::new(det.position, 0.0)?;
    let (_, free) = run_sink(grid, packet, &free_det, t_final)?;
    let overlap: Complex64 = free
        .iter()
        .zip(&undetected_state)
        .map(|(f, s)| f.conj() * s)
        .sum::<Complex64>()
        * dx;
    let free_norm = norm_sqr(&free, dx);
    let deficit = (1.0 - overlap.norm_sqr() / free_norm).max(0.0);
    Ok(BackAction {
        undetected_state,
        overlap_deficit: deficit,
        survival,
    })
}
