//! One function per subcommand. Inputs are converted to natural units on
//! entry; times, densities and velocities are converted back on output.

use eeqt_core::analytic::{
    arrival_density, cumulative_and_efficiency, wigner_density, ArrivalDistribution, DetectorSpec, GaussianPacket,
};
use eeqt_core::gridsim::{evolve_with_sink, Grid};
use eeqt_core::montecarlo::{binomial_sigma, ks_critical, ks_statistic, sample_events, Outcome};
use eeqt_core::operator::{discretized_line_model, rate_series, LineGrid};
use eeqt_core::sweep::{
    efficiency_curve, linear_fit, optimize_alpha, velocity_sweep, EfficiencySettings, SWEEP_BRACKET,
};
use eeqt_core::units::Dimension;

use crate::config::RunConfig;
use crate::output::{num, Report};
use crate::Failure;

/// Natural-unit view of a resolved config.
struct Setup {
    packet: GaussianPacket,
    position: f64,
    alphas: Vec<f64>,
    /// Physical value of one natural time unit.
    time_unit: f64,
    velocity_unit: f64,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        if cfg.detector.alphas.is_empty() {
            return Err(Failure::Usage("at least one coupling α is required".into()));
        }
        let scale = cfg.physical_scale()?;
        Ok(Self {
            packet: GaussianPacket::new(
                cfg.natural(cfg.x0(), Dimension::Length)?,
                cfg.natural(cfg.v(), Dimension::Velocity)?,
            )?,
            position: cfg.natural(cfg.detector.position, Dimension::Length)?,
            alphas: cfg.detector.alphas.clone(),
            time_unit: scale.time_unit(),
            velocity_unit: scale.velocity_unit(),
        })
    }

    fn detector(&self, alpha: f64) -> Result<DetectorSpec, Failure> {
        Ok(DetectorSpec::new(self.position, alpha)?)
    }

    fn settings(&self, cfg: &RunConfig) -> Result<EfficiencySettings, Failure> {
        Ok(EfficiencySettings {
            detector_position: self.position,
            horizon: cfg.natural(cfg.numerics.horizon, Dimension::Time)?,
            tol: cfg.numerics.tol,
        })
    }
}

fn positive(name: &str, value: f64) -> Result<f64, Failure> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Failure::Usage(format!("{name} must be positive, got {value}")))
    }
}

/// 0, step, 2·step, … up to `end` (inclusive up to rounding).
fn time_axis(end: f64, step: f64) -> Vec<f64> {
    let n = (end / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn distribution(setup: &Setup, cfg: &RunConfig, alpha: f64) -> Result<ArrivalDistribution, Failure> {
    let horizon = cfg.natural(positive("horizon", cfg.numerics.horizon)?, Dimension::Time)?;
    Ok(cumulative_and_efficiency(
        &setup.packet,
        &setup.detector(alpha)?,
        horizon,
        cfg.numerics.tol,
    )?)
}

fn note_distribution(report: &mut Report, alpha: f64, dist: &ArrivalDistribution) {
    report.note(format!("efficiency[alpha={alpha}]"), num(dist.efficiency));
    report.note(format!("tail_error[alpha={alpha}]"), num(dist.tail_error));
    report.note(format!("quadrature_error[alpha={alpha}]"), num(dist.quadrature_error));
    report.note(format!("low_confidence[alpha={alpha}]"), dist.low_confidence);
}

pub fn density(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let t_max = cfg.natural(positive("t_max", cfg.numerics.t_max)?, Dimension::Time)?;
    let dt = cfg.natural(positive("dt", cfg.numerics.dt)?, Dimension::Time)?;
    let times = time_axis(t_max, dt);

    let mut columns = vec!["t".to_string(), "wigner".to_string()];
    for alpha in &setup.alphas {
        columns.push(format!("p[alpha={alpha}]"));
        columns.push(format!("P[alpha={alpha}]"));
    }
    let mut report = Report::new(columns);
    let mut curves = Vec::new();
    for &alpha in &setup.alphas {
        let det = setup.detector(alpha)?;
        let dist = distribution(&setup, cfg, alpha)?;
        note_distribution(&mut report, alpha, &dist);
        let p: Vec<f64> = times
            .iter()
            .map(|&t| arrival_density(&setup.packet, &det, t))
            .collect::<Result<_, _>>()?;
        let cdf: Vec<f64> = times.iter().map(|&t| dist.cdf(t)).collect();
        curves.push((p, cdf));
    }
    for (i, &t) in times.iter().enumerate() {
        let wigner = wigner_density(&setup.packet, setup.position, t)?;
        let mut cells = vec![num(t * setup.time_unit), num(wigner / setup.time_unit)];
        for (p, cdf) in &curves {
            cells.push(num(p[i] / setup.time_unit));
            cells.push(num(cdf[i]));
        }
        report.row(cells);
    }
    Ok(report)
}

pub fn efficiency_curve_cmd(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let (lo, hi, n) = (cfg.sweep.alpha_min, cfg.sweep.alpha_max, cfg.sweep.points);
    if !(lo > 0.0 && hi > lo && n >= 3) {
        return Err(Failure::Usage(format!(
            "efficiency curve needs 0 < alpha_min < alpha_max and at least 3 points (got {lo}, {hi}, {n})"
        )));
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let alphas: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
    let scan = efficiency_curve(&setup.packet, &alphas, &setup.settings(cfg)?)?;
    let mut report = Report::new(["alpha", "efficiency", "tail_error", "low_confidence"]);
    report.note("alpha_star", num(scan.alpha_star));
    report.note("p_star", num(scan.p_star));
    report.note("boundary", scan.boundary);
    report.note("unimodality_violations", scan.unimodality_violations);
    for p in &scan.points {
        report.row([
            num(p.alpha),
            num(p.efficiency),
            num(p.tail_error),
            (p.low_confidence as u8).to_string(),
        ]);
    }
    Ok(report)
}

pub fn optimize(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let [lo, hi] = cfg.sweep.bracket.expect("resolved config");
    let opt = optimize_alpha(
        &setup.packet,
        (lo, hi),
        positive("alpha_tol", cfg.sweep.alpha_tol)?,
        &setup.settings(cfg)?,
    )?;
    let mut report = Report::new(["alpha_star", "p_star", "evaluations", "low_confidence"]);
    report.row([
        num(opt.alpha_star),
        num(opt.p_star),
        opt.evaluations.to_string(),
        (opt.low_confidence as u8).to_string(),
    ]);
    Ok(report)
}

pub fn sweep_velocity(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let velocities: Vec<f64> = cfg
        .sweep
        .velocities
        .iter()
        .map(|&v| cfg.natural(v, Dimension::Velocity))
        .collect::<Result<_, _>>()?;
    let rows = velocity_sweep(
        &velocities,
        setup.packet.x0,
        SWEEP_BRACKET,
        positive("alpha_tol", cfg.sweep.alpha_tol)?,
        &setup.settings(cfg)?,
    )?;
    let mut report = Report::new(["v", "alpha_star", "p_star", "low_confidence"]);
    report.note(
        "bracket_relative",
        format!("[{}, {}] x max(v, 1/4)", SWEEP_BRACKET.0, SWEEP_BRACKET.1),
    );
    let top = &rows[rows.len() / 2..];
    if top.len() >= 2 {
        let fit = linear_fit(
            &top.iter().map(|r| r.v).collect::<Vec<_>>(),
            &top.iter().map(|r| r.alpha_star).collect::<Vec<_>>(),
        )?;
        report.note(
            "top_half_fit",
            format!(
                "slope {} intercept {} r_squared {}",
                num(fit.slope),
                num(fit.intercept),
                num(fit.r_squared)
            ),
        );
    }
    for r in &rows {
        report.row([
            num(r.v * setup.velocity_unit),
            num(r.alpha_star),
            num(r.p_star),
            (r.low_confidence as u8).to_string(),
        ]);
    }
    Ok(report)
}

pub fn simulate(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let mc = &cfg.montecarlo;
    if mc.n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    if !(mc.level > 0.0 && mc.level < 1.0) {
        return Err(Failure::Usage(format!("KS level must lie in (0, 1), got {}", mc.level)));
    }
    let alpha = setup.alphas[0];
    let dist = distribution(&setup, cfg, alpha)?;
    let ensemble = sample_events(&dist, mc.n, mc.seed)?;
    let times = ensemble.detected_times();

    let mut report = Report::new(["seed", "outcome", "time"]);
    note_distribution(&mut report, alpha, &dist);
    report.note("detected_fraction", num(ensemble.detected_fraction));
    if dist.efficiency > 0.0 && dist.efficiency < 1.0 {
        let z = (ensemble.detected_fraction - dist.efficiency) / binomial_sigma(dist.efficiency, mc.n);
        report.note("fraction_z", num(z));
    }
    if !times.is_empty() {
        let d = ks_statistic(&times, |t| dist.cdf(t) / dist.efficiency);
        let critical = ks_critical(times.len(), mc.level);
        report.note("ks_statistic", num(d));
        report.note("ks_critical", num(critical));
        report.note("ks_pass", d < critical);
    }
    for r in &ensemble.records {
        match r.outcome {
            Outcome::Detected(t) => report.row([r.seed.to_string(), "detected".into(), num(t * setup.time_unit)]),
            Outcome::Escaped => report.row([r.seed.to_string(), "escaped".into(), String::new()]),
        }
    }
    Ok(report)
}

fn l1(a: &[f64], b: &[f64], step: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    d.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum()
}

fn grid_for(setup: &Setup, cfg: &RunConfig, det: &DetectorSpec) -> Result<Grid, Failure> {
    Ok(Grid::centered(
        &setup.packet,
        det,
        cfg.natural(cfg.grid.width, Dimension::Length)?,
        cfg.grid.nodes,
        cfg.natural(cfg.grid.dt, Dimension::Time)?,
    )?)
}

pub fn oracle_check(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    let o = &cfg.oracle;
    let horizon = cfg.natural(positive("oracle horizon", o.horizon)?, Dimension::Time)?;
    let step = cfg.natural(positive("oracle step", o.step)?, Dimension::Time)?;
    let line_dx = cfg.natural(positive("line_dx", o.line_dx)?, Dimension::Length)?;
    let times = time_axis(horizon, step);

    let mut report = Report::new(["alpha", "pair", "l1", "tolerance", "pass"]);
    let mut failures = Vec::new();
    for &alpha in &setup.alphas {
        let det = setup.detector(alpha)?;
        let analytic: Vec<f64> = times
            .iter()
            .map(|&t| arrival_density(&setup.packet, &det, t))
            .collect::<Result<_, _>>()?;
        let run = evolve_with_sink(&grid_for(&setup, cfg, &det)?, &setup.packet, &det, horizon)?;
        let grid: Vec<f64> = times.iter().map(|&t| run.density_at(t)).collect();
        let line_grid = LineGrid::covering(&setup.packet, &det, horizon, line_dx)?;
        let line = rate_series(&discretized_line_model(&line_grid, &setup.packet, &det)?, &times)?.density;
        report.note(format!("grid_valid[alpha={alpha}]"), run.valid);
        report.note(
            format!("max_boundary_probability[alpha={alpha}]"),
            num(run.max_boundary_probability),
        );
        if !run.valid {
            failures.push(format!("alpha={alpha}: grid run invalid (boundary probability)"));
        }
        // L¹ of densities in natural units is dimensionless
        for (pair, a, b) in [
            ("analytic-gridsim", &analytic, &grid),
            ("analytic-line", &analytic, &line),
            ("gridsim-line", &grid, &line),
        ] {
            let distance = l1(a, b, step);
            let pass = distance <= o.tol;
            if !pass {
                failures.push(format!("alpha={alpha} {pair}: L1 {distance:.3e} > {:.3e}", o.tol));
            }
            report.row([
                alpha.to_string(),
                pair.to_string(),
                num(distance),
                num(o.tol),
                (pass as u8).to_string(),
            ]);
        }
    }
    report.note("result", if failures.is_empty() { "PASS" } else { "FAIL" });
    if !failures.is_empty() {
        report.failure = Some(Failure::Oracle(failures.join("; ")));
    }
    Ok(report)
}

pub fn grid_run(cfg: &RunConfig) -> Result<Report, Failure> {
    let setup = Setup::new(cfg)?;
    if cfg.grid.every == 0 {
        return Err(Failure::Usage("every must be at least 1".into()));
    }
    let alpha = setup.alphas[0];
    let det = setup.detector(alpha)?;
    let t_max = cfg.natural(positive("t_max", cfg.numerics.t_max)?, Dimension::Time)?;
    let grid = grid_for(&setup, cfg, &det)?;
    let run = evolve_with_sink(&grid, &setup.packet, &det, t_max)?;
    let closed_form = cumulative_and_efficiency(&setup.packet, &det, t_max, cfg.numerics.tol)?;

    let mut report = Report::new(["t", "survival", "density"]);
    report.note("alpha", alpha);
    report.note("dx", num(grid.dx()));
    report.note("nyquist_phase", num(grid.nyquist_phase()));
    report.note("detected", num(run.detected()));
    report.note("closed_form_detected", num(closed_form.cdf(t_max)));
    report.note("max_boundary_probability", num(run.max_boundary_probability));
    report.note("valid", run.valid);
    let last = run.times.len() - 1;
    for i in (0..=last).filter(|i| i % cfg.grid.every == 0 || *i == last) {
        report.row([
            num(run.times[i] * setup.time_unit),
            num(run.survival[i]),
            num(run.density[i] / setup.time_unit),
        ]);
    }
    if !run.valid {
        report.failure = Some(Failure::Numerical(format!(
            "probability {:.3e} reached the box boundary; widen the grid",
            run.max_boundary_probability
        )));
    }
    Ok(report)
}
