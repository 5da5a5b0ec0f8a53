//! Reproducible experiments: a validated config in, CSV/JSON/snapshot
//! artifacts and a JSON report out.
//!
//! Every run writes `report.json` with the config echo, the headline
//! metrics, boolean checks, iteration counts and the list of artifacts.
//! CSV tables are byte-identical across runs of the same config; the
//! report itself also carries the wall-clock time.

mod config;
mod output;

pub use config::{
    AdiabaticConfig, BradlowConfig, Domain, DynamicsConfig, ExperimentConfig, ExperimentKind, GeodesicConfig, GridConfig,
    MetricConfig, RandomDivisor, ScatterConfig, TableConfig, ZeroSpec,
};
pub use output::{format_cell, write_atomic, ArtifactWriter, Table};

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    adiabatic_compare, gauss_residual, leapfrog_evolve_with, track_zeros, translation_velocity, AdiabaticParams, ComparisonReport,
    DynamicState, CURRENT_SIGN,
};
use crate::error::{Error, Result};
use crate::field::{vortex_number, FieldConfig};
use crate::grid::Grid2D;
use crate::moduli::{
    adiabatic_trajectory, closest_approach, deflection_angle, kinetic_scalar, labelled_zeros, scattering_angle, t_metric,
    variational_trajectory, FlatMetric, GeodesicState, MetricOracle, ModuliPoint, RadialMetric, SlicedMetric,
};
use crate::snapshot;
use crate::solver::{bradlow_margin, solve_taubes, SolverParams, ZeroDivisor};

/// Process exit status for a finished run.
pub fn exit_code(result: &Result<ExperimentReport>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) => error_exit_code(e),
    }
}

/// 2 for invalid input, 3 for a solver that did not converge, 4 for a
/// dynamics blow-up, 1 for I/O trouble.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidParameter(_)
        | Error::ShapeMismatch(_)
        | Error::Config(_)
        | Error::BradlowViolation { .. }
        | Error::ZeroTooCloseToBoundary { .. }
        | Error::CflViolation { .. }
        | Error::GaussViolation { .. }
        | Error::NearCoincidence { .. }
        | Error::IllDefinedVortexNumber { .. }
        | Error::NoEncounter { .. } => 2,
        Error::NonConvergence { .. } | Error::LinearSolve { .. } | Error::MetricNotPositive { .. } => 3,
        Error::BlowUp { .. } => 4,
        Error::Format(_) | Error::Io(_) | Error::Json(_) => 1,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub headline: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub iterations: usize,
    pub wall_clock_seconds: f64,
    pub output_dir: PathBuf,
    pub artifacts: Vec<String>,
}

/// Results of one experiment before they are written.
#[derive(Default)]
pub struct Outcome {
    pub headline: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub iterations: usize,
    pub tables: Vec<Table>,
    pub blobs: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn metric(&mut self, name: &str, value: f64) {
        self.headline.insert(name.to_string(), value);
    }

    fn check(&mut self, name: &str, value: bool) {
        self.checks.insert(name.to_string(), value);
    }
}

/// Writes the tables and binary artifacts of an outcome.
pub fn emit_plotdata(outcome: &Outcome, writer: &mut ArtifactWriter) -> Result<()> {
    for t in &outcome.tables {
        writer.table(t)?;
    }
    for (name, bytes) in &outcome.blobs {
        writer.bytes(name, bytes)?;
    }
    Ok(())
}

/// Where a run writes: the command-line override, the config's
/// `output_dir`, or `vortexlab-out/<experiment>`.
pub fn output_dir(config: &ExperimentConfig, kind: ExperimentKind, override_dir: Option<&Path>) -> PathBuf {
    override_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("vortexlab-out").join(kind.name()))
}

/// Validates, computes and writes one experiment. Nothing touches the
/// file system until validation has passed.
pub fn run(config: &ExperimentConfig, requested: Option<ExperimentKind>, override_dir: Option<&Path>) -> Result<ExperimentReport> {
    let kind = config.kind(requested)?;
    config.validate(kind)?;
    let grid = config.grid.build()?;
    let start = Instant::now();
    let outcome = match kind {
        ExperimentKind::SolveDisk | ExperimentKind::SolveTorus => run_solve(config, &grid)?,
        ExperimentKind::BradlowSweep => run_bradlow(config, &grid)?,
        ExperimentKind::Metric => run_metric(config, &grid)?,
        ExperimentKind::Geodesic => run_geodesic(config, &grid)?,
        ExperimentKind::Scatter => run_scatter(config, &grid)?,
        ExperimentKind::Evolve => run_evolve(config, &grid)?,
        ExperimentKind::AdiabaticCompare => run_adiabatic(config, &grid)?,
    };
    let dir = output_dir(config, kind, override_dir);
    let mut writer = ArtifactWriter::create(&dir)?;
    emit_plotdata(&outcome, &mut writer)?;
    let mut report = ExperimentReport {
        experiment: kind,
        config: config.clone(),
        headline: outcome.headline,
        checks: outcome.checks,
        iterations: outcome.iterations,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        output_dir: dir,
        artifacts: writer.written().to_vec(),
    };
    report.artifacts.push("report.json".into());
    writer.json("report.json", &report)?;
    Ok(report)
}

/// Largest distance from a prescribed zero to the nearest located one.
fn placement_error(prescribed: &[Complex64], located: &[Complex64], grid: &Grid2D) -> f64 {
    prescribed
        .iter()
        .map(|z| located.iter().map(|w| grid.min_image(w - z).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn run_solve(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let divisor = config.divisor()?;
    let tau = config.solver.tau;
    let sol = solve_taubes(&divisor, grid, &config.solver)?;
    let e = sol.energy(grid);
    let d = divisor.degree() as f64;
    let mut out = Outcome { iterations: sol.newton_iters, ..Default::default() };
    out.metric("energy", e.total);
    out.metric("energy_field", e.field_term);
    out.metric("energy_gradient", e.gradient_term);
    out.metric("energy_potential", e.potential_term);
    out.metric("energy_over_pi_tau_d", e.total / (PI * tau * d));
    out.metric("r1", sol.residuals.0);
    out.metric("r2", sol.residuals.1);
    out.metric("taubes_residual", sol.taubes_residual);
    out.metric("newton_iters", sol.newton_iters as f64);
    out.metric("max_modulus_sq", sol.max_modulus_sq());
    out.metric("vortex_number", vortex_number(&sol.cfg, grid).map(|k| k as f64).unwrap_or(f64::NAN));
    let located = track_zeros(&sol.cfg, grid);
    let positions: Vec<Complex64> = located.iter().map(|z| z.position).collect();
    out.metric("max_zero_error", placement_error(&divisor.reduced(grid).expanded(), &positions, grid));
    out.metric("grid_spacing", grid.h);
    if grid.is_torus() {
        let target = bradlow_margin(divisor.degree(), tau, grid.area());
        out.metric("mass", sol.mass(grid));
        out.metric("mass_target", target);
        out.metric("mass_relative_error", (sol.mass(grid) - target).abs() / target);
    }

    let mut zeros = Table::new("zeros", &["x", "y", "winding"]);
    for z in &located {
        zeros.push(vec![z.position.re, z.position.im, z.winding as f64]);
    }
    let mut prescribed = Table::new("divisor", &["x", "y", "multiplicity"]);
    for &(z, m) in &divisor.points {
        prescribed.push(vec![z.re, z.im, m as f64]);
    }
    let mut slice = Table::new("slice", &["x", "modulus_sq", "log_modulus_sq"]);
    let j = grid.n / 2;
    for i in 0..grid.n {
        let k = grid.idx(i, j);
        slice.push(vec![grid.coord(i), sol.cfg.phi[k].norm_sqr(), sol.u[k]]);
    }
    let mut fields = Vec::new();
    snapshot::write_static(&mut fields, grid, &sol.cfg)?;
    out.tables = vec![zeros, prescribed, slice];
    out.blobs.push(("fields.glf".into(), fields));
    Ok(out)
}

/// One row of a Bradlow sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BradlowRow {
    pub tau: f64,
    pub margin: f64,
    pub feasible: bool,
    /// `NaN` for infeasible rows.
    pub max_modulus_sq: f64,
    pub mass: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BradlowSweep {
    pub rows: Vec<BradlowRow>,
    /// `max |phi|^2` strictly increases with the margin over feasible rows.
    pub monotone: bool,
}

/// Torus solves across ascending `taus`. Rows below the Bradlow bound are
/// marked infeasible; any other failure aborts the sweep.
pub fn bradlow_sweep(divisor: &ZeroDivisor, taus: &[f64], grid: &Grid2D, params: &SolverParams) -> Result<BradlowSweep> {
    if !grid.is_torus() {
        return Err(Error::InvalidGrid("the Bradlow sweep runs on the torus".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("taus must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let margin = bradlow_margin(divisor.degree(), tau, grid.area());
        let p = SolverParams { tau, ..*params };
        match solve_taubes(divisor, grid, &p) {
            Ok(sol) => rows.push(BradlowRow {
                tau,
                margin,
                feasible: true,
                max_modulus_sq: sol.max_modulus_sq(),
                mass: sol.mass(grid),
                newton_iters: sol.newton_iters,
            }),
            Err(Error::BradlowViolation { .. }) => {
                rows.push(BradlowRow { tau, margin, feasible: false, max_modulus_sq: f64::NAN, mass: f64::NAN, newton_iters: 0 })
            }
            Err(e) => return Err(e),
        }
    }
    let feasible: Vec<f64> = rows.iter().filter(|r| r.feasible).map(|r| r.max_modulus_sq).collect();
    let monotone = feasible.windows(2).all(|w| w[1] > w[0]);
    Ok(BradlowSweep { rows, monotone })
}

fn run_bradlow(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let divisor = config.divisor()?;
    let taus = &config.bradlow.as_ref().expect("validated").taus;
    let sweep = bradlow_sweep(&divisor, taus, grid, &config.solver)?;
    let mut out = Outcome::default();
    let mut table = Table::new("bradlow", &["tau", "margin", "feasible", "max_modulus_sq", "mass", "mass_relative_error", "newton_iters"]);
    let mut worst_mass: f64 = 0.0;
    for r in &sweep.rows {
        let rel = if r.feasible { (r.mass - r.margin).abs() / r.margin } else { f64::NAN };
        if r.feasible {
            worst_mass = worst_mass.max(rel);
        }
        table.push(vec![r.tau, r.margin, r.feasible as u8 as f64, r.max_modulus_sq, r.mass, rel, r.newton_iters as f64]);
    }
    out.iterations = sweep.rows.iter().map(|r| r.newton_iters).sum();
    out.metric("threshold_tau", 4.0 * PI * divisor.degree() as f64 / grid.area());
    out.metric("feasible_rows", sweep.rows.iter().filter(|r| r.feasible).count() as f64);
    out.metric("max_mass_relative_error", worst_mass);
    out.metric("max_newton_iters", sweep.rows.iter().map(|r| r.newton_iters).max().unwrap_or(0) as f64);
    out.check("max_modulus_sq_monotone", sweep.monotone);
    out.check("feasible_iff_positive_margin", sweep.rows.iter().all(|r| r.feasible == (r.margin > 0.0)));
    out.tables.push(table);
    Ok(out)
}

fn run_metric(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let divisor = config.divisor()?;
    let m = config.metric.clone().unwrap_or_default();
    let q = ModuliPoint::from_zeros(&divisor.expanded())?;
    let g = t_metric(&q, grid, &config.solver, m.fd_step, m.coordinates)?;
    let eig = g.eigenvalues();
    let mut out = Outcome::default();
    let header: Vec<String> = (0..g.dim).map(|k| format!("g{k}")).chain(std::iter::once("eigenvalue".to_string())).collect();
    let mut table = Table { name: "metric".into(), header, rows: Vec::new() };
    let mut offset: f64 = 0.0;
    for i in 0..g.dim {
        let mut row: Vec<f64> = g.g[i * g.dim..(i + 1) * g.dim].to_vec();
        for (j, x) in row.iter().enumerate() {
            let target = if i == j { PI * config.solver.tau } else { 0.0 };
            offset = offset.max((x - target).abs());
        }
        row.push(eig[i]);
        table.push(row);
    }
    out.metric("trace", g.trace());
    out.metric("min_eigenvalue", eig.iter().cloned().fold(f64::INFINITY, f64::min));
    out.metric("max_eigenvalue", eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    out.metric("max_relative_offset_from_pi_identity", offset / (PI * config.solver.tau));
    out.check("near_coincidence", g.near_coincidence);
    let mut zeros = Table::new("zeros", &["x", "y"]);
    for z in q.zeros() {
        zeros.push(vec![z.re, z.im]);
    }
    out.tables = vec![table, zeros];
    Ok(out)
}

/// Start of a centred pair: zeros `+-z` with `z = -half_separation + i b/2`,
/// each moving towards the other with `speed`, in coordinates `w = z_1 z_2`.
pub fn pair_initial_data(half_separation: f64, impact_parameter: f64, speed: f64) -> (Vec<f64>, Vec<f64>) {
    let z = Complex64::new(-half_separation, 0.5 * impact_parameter);
    let w = -z * z;
    let wdot = -2.0 * z * speed;
    (vec![w.re, w.im], vec![wdot.re, wdot.im])
}

fn radial_table(grid: &Grid2D, solver: &SolverParams, table: &TableConfig) -> Result<RadialMetric> {
    let sliced = SlicedMetric { grid: *grid, params: *solver, fd_step: table.fd_step };
    RadialMetric::build(&sliced, table.rho_max, table.points)
}

fn table_of(rm: &RadialMetric) -> Table {
    let mut t = Table::new("metric_table", &["rho", "f"]);
    for (r, f) in rm.rho.iter().zip(&rm.f) {
        t.push(vec![*r, *f]);
    }
    t
}

fn trajectory_table(name: &str, oracle: &dyn MetricOracle, traj: &[GeodesicState]) -> Result<Table> {
    let zs: Vec<Vec<Complex64>> = traj.iter().map(|s| s.q.zeros().to_vec()).collect();
    let labelled = labelled_zeros(&zs);
    let d = traj.first().map_or(0, |s| s.q.degree());
    let mut header = vec!["t".to_string()];
    header.extend((0..traj.first().map_or(0, |s| s.x.len())).map(|k| format!("x{k}")));
    for k in 0..d {
        header.push(format!("z{k}_x"));
        header.push(format!("z{k}_y"));
    }
    header.push("kinetic".into());
    let mut t = Table { name: name.into(), header, rows: Vec::with_capacity(traj.len()) };
    for (s, z) in traj.iter().zip(&labelled) {
        let mut row = vec![s.t];
        row.extend(&s.x);
        for w in z {
            row.push(w.re);
            row.push(w.im);
        }
        row.push(kinetic_scalar(oracle, &s.x, &s.qdot)?);
        t.push(row);
    }
    Ok(t)
}

fn run_geodesic(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let g = config.geodesic.clone().unwrap_or_default();
    let rm = radial_table(grid, &config.solver, &g.table)?;
    let (x0, v0) = pair_initial_data(g.half_separation, g.impact_parameter, g.speed);
    let rk = adiabatic_trajectory(&rm, &x0, &v0, g.t_end, g.h_step)?;
    let var = variational_trajectory(&rm, &x0, &v0, g.t_end, g.h_step)?;
    let discrepancy = rk
        .iter()
        .zip(&var)
        .map(|(a, b)| a.x.iter().zip(&b.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let k0 = kinetic_scalar(&rm, &rk[0].x, &rk[0].qdot)?;
    let mut drift: f64 = 0.0;
    for s in &rk {
        drift = drift.max(((kinetic_scalar(&rm, &s.x, &s.qdot)? - k0) / k0).abs());
    }
    let mut out = Outcome::default();
    out.metric("deflection_angle_deg", deflection_angle(&rk)?);
    out.metric("closest_approach", closest_approach(&rk)?);
    out.metric("integrator_discrepancy", discrepancy);
    out.metric("kinetic_relative_drift", drift);
    out.metric("table_anisotropy", rm.anisotropy);
    match scattering_angle(&rk, g.ball_radius) {
        Ok(a) => {
            out.metric("scattering_angle_deg", a);
            out.check("entered_ball", true);
        }
        Err(Error::NoEncounter { .. }) => out.check("entered_ball", false),
        Err(e) => return Err(e),
    }
    out.tables = vec![trajectory_table("trajectory", &rm, &rk)?, trajectory_table("trajectory_variational", &rm, &var)?, table_of(&rm)];
    Ok(out)
}

fn run_scatter(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let s = config.scatter.clone().unwrap_or_default();
    let rm = radial_table(grid, &config.solver, &s.table)?;
    let rows: Vec<(f64, f64, f64)> = s
        .impact_parameters
        .par_iter()
        .map(|&b| -> Result<(f64, f64, f64)> {
            let (x0, v0) = pair_initial_data(s.half_separation, b, s.speed);
            let traj = adiabatic_trajectory(&rm, &x0, &v0, s.t_end, s.h_step)?;
            Ok((b, deflection_angle(&traj)?, closest_approach(&traj)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Outcome::default();
    let mut table = Table::new("scatter", &["impact_parameter", "angle_deg", "closest_approach"]);
    for &(b, a, c) in &rows {
        table.push(vec![b, a, c]);
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.check("angle_decreasing_in_impact_parameter", sorted.windows(2).all(|w| w[1].1 < w[0].1));
    out.metric("table_anisotropy", rm.anisotropy);
    for (k, r) in rows.iter().enumerate() {
        out.metric(&format!("angle_deg_{k}"), r.1);
    }
    out.tables = vec![table, table_of(&rm)];
    Ok(out)
}

/// `phi' = amplitude * exp(-|x - c|^2 / width^2) phi`: a real multiple of
/// `phi`, so it carries no charge and satisfies the Gauss constraint.
fn breathing_perturbation(cfg: &FieldConfig, grid: &Grid2D, centre: Complex64, amplitude: f64, width: f64) -> FieldConfig {
    let mut out = FieldConfig::zeros(grid);
    for j in 0..grid.n {
        for i in 0..grid.n {
            let k = grid.idx(i, j);
            let r2 = grid.min_image(grid.point(i, j) - centre).norm_sqr();
            out.phi[k] = cfg.phi[k] * (amplitude * (-r2 / (width * width)).exp());
        }
    }
    out
}

fn run_evolve(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let divisor = config.divisor()?;
    let dc = config.dynamics.clone().unwrap_or_default();
    let tau = config.solver.tau;
    let params = dc.params(tau);
    let sol = solve_taubes(&divisor, grid, &config.solver)?;
    let zeros = divisor.expanded();
    let centre = zeros.iter().sum::<Complex64>() / zeros.len() as f64;
    let mut velocity = FieldConfig::zeros(grid);
    if dc.boost != [0.0, 0.0] {
        velocity = translation_velocity(&sol.cfg, grid, dc.boost)?;
    }
    if dc.perturbation != 0.0 {
        velocity = velocity.axpy(1.0, &breathing_perturbation(&sol.cfg, grid, centre, dc.perturbation, dc.perturbation_width));
    }
    let state0 = DynamicState::new(grid, sol.cfg, velocity, 0.0)?;
    let (_, _, e0) = state0.energies(grid, tau);
    let g0 = state0.initial_gauss;
    let start: Vec<Complex64> = track_zeros(&state0.cfg, grid).iter().map(|z| z.position).collect();

    let mut series = Table::new("trajectory", &["t", "energy", "kinetic", "potential", "gauss_residual", "zero_count"]);
    let mut zero_rows = Table::new("zeros", &["t", "index", "x", "y", "winding"]);
    let mut blobs = Vec::new();
    let mut drift: f64 = 0.0;
    let mut gauss_growth: f64 = 0.0;
    let mut displacement: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let mut record = |s: &DynamicState| {
        let (t, u, e) = s.energies(grid, tau);
        let g = gauss_residual(s, grid);
        drift = drift.max(((e - e0) / e0).abs());
        gauss_growth = gauss_growth.max(g - g0);
        let zs = track_zeros(&s.cfg, grid);
        for (k, z) in zs.iter().enumerate() {
            zero_rows.push(vec![s.t, k as f64, z.position.re, z.position.im, z.winding as f64]);
            let nearest = start.iter().map(|w| grid.min_image(z.position - w).norm()).fold(f64::INFINITY, f64::min);
            displacement = displacement.max(nearest);
        }
        series.push(vec![s.t, e, t, u, g, zs.len() as f64]);
    };
    record(&state0);
    let last = leapfrog_evolve_with(&state0, grid, &params, CURRENT_SIGN, |info| {
        if info.step % params.sample_every == 0 || info.step == params.n_steps {
            record(info.state);
        }
        if dc.snapshot_every > 0 && info.step % dc.snapshot_every == 0 {
            let mut bytes = Vec::new();
            match snapshot::write_dynamic(&mut bytes, grid, info.state.t, &info.state.cfg, &info.state.velocity()) {
                Ok(()) => blobs.push((format!("state_{:08}.gld", info.step), bytes)),
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            }
        }
        true
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut out = Outcome { iterations: params.n_steps, ..Default::default() };
    out.metric("energy_initial", e0);
    out.metric("energy_relative_drift", drift);
    out.metric("gauss_initial", g0);
    out.metric("gauss_growth", gauss_growth);
    out.metric("max_zero_displacement", displacement);
    out.metric("final_time", last.t);
    out.metric("cfl", params.cfl(grid));
    out.tables = vec![series, zero_rows];
    out.blobs = blobs;
    Ok(out)
}

fn samples_table(name: &str, r: &ComparisonReport, d: usize) -> Table {
    let mut header: Vec<String> = ["slow_time", "zero_dev", "chart_dev", "energy", "gauss_residual"].iter().map(|s| s.to_string()).collect();
    for side in ["tracked", "geodesic"] {
        for k in 0..d {
            header.push(format!("{side}{k}_x"));
            header.push(format!("{side}{k}_y"));
        }
    }
    let mut t = Table { name: name.into(), header, rows: Vec::with_capacity(r.samples.len()) };
    for s in &r.samples {
        let mut row = vec![s.slow_time, s.zero_dev, s.chart_dev, s.energy, s.gauss];
        for zs in [&s.tracked, &s.geodesic] {
            for k in 0..d {
                let z = zs.get(k).copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                row.push(z.re);
                row.push(z.im);
            }
        }
        t.push(row);
    }
    t
}

fn run_adiabatic(config: &ExperimentConfig, grid: &Grid2D) -> Result<Outcome> {
    let a = config.adiabatic.clone().unwrap_or_default();
    let params = AdiabaticParams { solver: config.solver, cfl: a.cfl, samples: a.samples, substeps: a.substeps, fd_step: a.fd_step };
    let mut out = Outcome::default();
    let (oracle, x0, v0): (Box<dyn MetricOracle>, Vec<f64>, Vec<f64>) = if a.degree == 2 {
        let rm = radial_table(grid, &config.solver, &a.table)?;
        out.metric("table_anisotropy", rm.anisotropy);
        out.tables.push(table_of(&rm));
        let (x0, v0) = pair_initial_data(a.half_separation, a.impact_parameter, a.speed);
        (Box::new(rm), x0, v0)
    } else {
        // chart c_1 = -z of a single vortex
        let flat = FlatMetric { dim: 2, scale: PI * config.solver.tau };
        (Box::new(flat), vec![a.half_separation, -0.5 * a.impact_parameter], vec![-a.speed, 0.0])
    };
    let oracle = oracle.as_ref();
    let reports: Vec<ComparisonReport> =
        a.epsilons.par_iter().map(|&eps| adiabatic_compare(grid, oracle, &x0, &v0, eps, a.slow_time_end, &params)).collect::<Result<_>>()?;
    let mut table = Table::new(
        "dev",
        &["epsilon", "dev", "path_length", "relative_dev", "chart_dev", "chart_path_length", "energy_drift", "gauss_growth", "steps", "dt"],
    );
    for (k, r) in reports.iter().enumerate() {
        table.push(vec![
            r.epsilon,
            r.dev,
            r.path_length,
            r.relative_dev,
            r.chart_dev,
            r.chart_path_length,
            r.energy_drift,
            r.gauss_growth,
            r.steps as f64,
            r.dt,
        ]);
        out.metric(&format!("dev_{k}"), r.dev);
        out.metric(&format!("relative_dev_{k}"), r.relative_dev);
        out.tables.push(samples_table(&format!("samples_{k}"), r, a.degree as usize));
        out.iterations += r.steps;
    }
    let mut by_eps: Vec<&ComparisonReport> = reports.iter().collect();
    by_eps.sort_by(|p, q| q.epsilon.total_cmp(&p.epsilon));
    out.check("dev_strictly_decreasing_with_epsilon", by_eps.windows(2).all(|w| w[1].dev < w[0].dev));
    if let Some(r) = by_eps.last() {
        out.metric("smallest_epsilon", r.epsilon);
        out.metric("smallest_epsilon_relative_dev", r.relative_dev);
    }
    out.metric("path_length", reports[0].path_length);
    out.tables.insert(0, table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(error_exit_code(&Error::Config("x".into())), 2);
        assert_eq!(error_exit_code(&Error::BradlowViolation { margin: -1.0 }), 2);
        assert_eq!(error_exit_code(&Error::NonConvergence { iters: 3, residual: 1.0 }), 3);
        assert_eq!(error_exit_code(&Error::BlowUp { t: 1.0, energy: 2.0, initial: 1.0 }), 4);
        assert_eq!(error_exit_code(&Error::Io(std::io::Error::other("disk full"))), 1);
    }

    #[test]
    fn pair_data_is_symmetric_and_head_on() {
        let (x, v) = pair_initial_data(2.0, 0.0, 0.5);
        // w = -z^2 with z = -2
        assert_eq!(x, vec![-4.0, 0.0]);
        assert_eq!(v, vec![2.0, 0.0]);
        let (x, _) = pair_initial_data(2.0, 1.0, 0.5);
        let z = Complex64::new(-2.0, 0.5);
        assert!((Complex64::new(x[0], x[1]) + z * z).norm() < 1e-15);
    }
}
