//! Run configuration: a TOML file, overridden by flags, resolved per
//! command and echoed verbatim into every output header.

use std::path::Path;

use clap::Args;
use eeqt_core::sweep::{DEFAULT_VELOCITIES, SWEEP_BRACKET, SWEEP_X0};
use eeqt_core::units::{to_natural, Dimension, PhysicalScale, Quantity};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// First line of every output header; also marks a file whose header can
/// be loaded back as a config.
pub const HEADER_TAG: &str = "# eeqt";
/// Separates the echoed config from run results in a header.
pub const HEADER_END: &str = "# ---";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub packet: PacketConfig,
    pub detector: DetectorConfig,
    pub scale: ScaleConfig,
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
    pub grid: GridConfig,
    pub oracle: OracleConfig,
    pub montecarlo: MonteCarloConfig,
}

/// Packet defaults depend on the command (see [`RunConfig::resolve`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    pub x0: Option<f64>,
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub position: f64,
    /// Dimensionless couplings; single-coupling commands use the first.
    pub alphas: Vec<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            position: 0.0,
            alphas: vec![0.5, 1.0, 2.0],
        }
    }
}

/// Physical scale of the inputs and outputs; all ones means natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub hbar: f64,
    pub mass: f64,
    pub eta: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            eta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// End of the tabulated time range.
    pub t_max: f64,
    /// Output sampling step.
    pub dt: f64,
    /// Integration horizon of P(∞) before the tail model takes over.
    pub horizon: f64,
    pub tol: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            t_max: 40.0,
            dt: 0.05,
            horizon: 200.0,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    /// Optimisation bracket; defaults depend on the packet.
    pub bracket: Option<[f64; 2]>,
    pub alpha_tol: f64,
    pub velocities: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_min: 0.05,
            alpha_max: 20.0,
            points: 41,
            bracket: None,
            alpha_tol: 1e-3,
            velocities: DEFAULT_VELOCITIES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub width: f64,
    pub nodes: usize,
    pub dt: f64,
    /// Keep every n-th time step in grid-run output.
    pub every: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            width: eeqt_core::gridsim::DEFAULT_WIDTH,
            nodes: eeqt_core::gridsim::DEFAULT_NODES,
            dt: eeqt_core::gridsim::DEFAULT_DT,
            every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub horizon: f64,
    pub step: f64,
    pub line_dx: f64,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            step: 0.01,
            line_dx: 0.05,
            tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub seed: u64,
    /// KS significance level.
    pub level: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            seed: 1,
            level: 0.01,
        }
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Initial packet centre
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Initial packet velocity
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// Detector position
    #[arg(long, allow_hyphen_values = true)]
    pub position: Option<f64>,
    /// Couplings α, comma separated
    #[arg(long = "alpha", value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// End of the output time range
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Output time step
    #[arg(long)]
    pub dt: Option<f64>,
    /// Integration horizon for P(∞)
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Tolerance on P(∞)
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Number of couplings in an efficiency curve
    #[arg(long)]
    pub points: Option<usize>,
    /// Optimisation bracket as LO,HI
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub bracket: Option<Vec<f64>>,
    /// Optimisation tolerance on α
    #[arg(long)]
    pub alpha_tol: Option<f64>,
    /// Velocities of the sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    pub velocities: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_width: Option<f64>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub grid_dt: Option<f64>,
    #[arg(long)]
    pub every: Option<usize>,
    #[arg(long)]
    pub oracle_horizon: Option<f64>,
    #[arg(long)]
    pub line_dx: Option<f64>,
    #[arg(long)]
    pub oracle_tol: Option<f64>,
    /// Number of sampled events
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

impl RunConfig {
    /// Reads a TOML config, or the header of a previous output file.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let body = if text.starts_with(HEADER_TAG) {
            echoed_config(text)
        } else {
            text.to_string()
        };
        toml::from_str(&body).map_err(|e| e.to_string())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), Failure> {
        if o.x0.is_some() {
            self.packet.x0 = o.x0;
        }
        if o.v.is_some() {
            self.packet.v = o.v;
        }
        set(&mut self.detector.position, o.position);
        set(&mut self.detector.alphas, o.alphas.clone());
        set(&mut self.scale.hbar, o.hbar);
        set(&mut self.scale.mass, o.mass);
        set(&mut self.scale.eta, o.eta);
        set(&mut self.numerics.t_max, o.t_max);
        set(&mut self.numerics.dt, o.dt);
        set(&mut self.numerics.horizon, o.horizon);
        set(&mut self.numerics.tol, o.tol);
        set(&mut self.sweep.alpha_min, o.alpha_min);
        set(&mut self.sweep.alpha_max, o.alpha_max);
        set(&mut self.sweep.points, o.points);
        if let Some(b) = &o.bracket {
            match b.as_slice() {
                [lo, hi] => self.sweep.bracket = Some([*lo, *hi]),
                _ => return Err(Failure::Usage("--bracket takes exactly two values LO,HI".into())),
            }
        }
        set(&mut self.sweep.alpha_tol, o.alpha_tol);
        set(&mut self.sweep.velocities, o.velocities.clone());
        set(&mut self.grid.width, o.grid_width);
        set(&mut self.grid.nodes, o.grid_nodes);
        set(&mut self.grid.dt, o.grid_dt);
        set(&mut self.grid.every, o.every);
        set(&mut self.oracle.horizon, o.oracle_horizon);
        set(&mut self.oracle.line_dx, o.line_dx);
        set(&mut self.oracle.tol, o.oracle_tol);
        set(&mut self.montecarlo.n, o.n);
        set(&mut self.montecarlo.seed, o.seed);
        Ok(())
    }

    /// Fills command-dependent defaults so the echoed config is complete.
    ///
    /// `optimize` defaults to a packet at rest on the detector, the other
    /// commands to the packet starting at -8 with velocity 2.
    pub fn resolve(&mut self, command: &str) {
        self.command = Some(command.to_string());
        let (x0, v) = match command {
            "optimize" => (self.detector.position, 0.0),
            "sweep-velocity" => (SWEEP_X0, 0.0),
            _ => (-8.0, 2.0),
        };
        let x0 = *self.packet.x0.get_or_insert(x0);
        let v = *self.packet.v.get_or_insert(v);
        if command == "optimize" && self.sweep.bracket.is_none() {
            self.sweep.bracket = Some(if v == 0.0 && x0 == self.detector.position {
                [0.5, 3.0]
            } else {
                let s = v.abs().max(0.25);
                [SWEEP_BRACKET.0 * s, SWEEP_BRACKET.1 * s]
            });
        }
    }

    /// TOML text of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn physical_scale(&self) -> Result<PhysicalScale, Failure> {
        PhysicalScale::new(self.scale.hbar, self.scale.mass, self.scale.eta).map_err(Failure::from)
    }

    /// Converts a configured physical value to natural units.
    pub fn natural(&self, value: f64, dimension: Dimension) -> Result<f64, Failure> {
        to_natural(&self.physical_scale()?, Quantity::new(value, dimension)).map_err(Failure::from)
    }

    pub fn x0(&self) -> f64 {
        self.packet.x0.expect("resolved config")
    }

    pub fn v(&self) -> f64 {
        self.packet.v.expect("resolved config")
    }
}

/// The config block of an output header, with the comment markers removed.
fn echoed_config(text: &str) -> String {
    text.lines()
        .skip(1)
        .take_while(|l| *l != HEADER_END)
        .map(|l| l.strip_prefix("# ").or_else(|| l.strip_prefix('#')).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}
