use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{gauss_residual, leapfrog_evolve_with, track_zeros, DynamicState, EvolutionParams, CURRENT_SIGN};
use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::grid::Grid2D;
use crate::moduli::{adiabatic_trajectory, gauge_fix_variation, MetricOracle, ModuliPoint};
use crate::solver::{solve_disk_chart, SolverParams};

/// Knobs for [`adiabatic_compare`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticParams {
    pub solver: SolverParams,
    /// `dt / h` of the hyperbolic run; the step is shortened slightly so
    /// samples fall on exact times.
    pub cfl: f64,
    /// Number of comparison samples after `t = 0`.
    pub samples: usize,
    /// Geodesic steps per comparison sample.
    pub substeps: usize,
    /// Finite-difference step for the moduli tangent, in chart units.
    pub fd_step: f64,
}

impl Default for AdiabaticParams {
    fn default() -> Self {
        Self { solver: SolverParams::default(), cfl: 0.5, samples: 40, substeps: 10, fd_step: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdiabaticSample {
    pub slow_time: f64,
    pub tracked: Vec<Complex64>,
    pub geodesic: Vec<Complex64>,
    /// Euclidean distance of the monic charts.
    pub chart_dev: f64,
    /// Distance of the zero sets under the best matching.
    pub zero_dev: f64,
    pub energy: f64,
    pub gauss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub slow_time_end: f64,
    /// `max` over samples of `zero_dev`.
    pub dev: f64,
    /// Length of the geodesic traced by its zeros: the sum over geodesic steps
    /// of the zero-set distance.
    pub path_length: f64,
    /// `dev / path_length` (infinite for a static geodesic).
    pub relative_dev: f64,
    /// `max` over samples of `chart_dev`.
    pub chart_dev: f64,
    /// Length of the geodesic in the monic chart.
    pub chart_path_length: f64,
    pub energy_drift: f64,
    pub gauss_growth: f64,
    pub steps: usize,
    pub dt: f64,
    pub samples: Vec<AdiabaticSample>,
}

fn chart_distance(a: &ModuliPoint, b: &ModuliPoint) -> f64 {
    a.real_chart().iter().zip(b.real_chart()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest distance under the best pairing (brute force over permutations).
fn zero_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    fn go(a: &[Complex64], b: &mut Vec<Complex64>, k: usize, cur: f64, best: &mut f64) {
        if k == a.len() {
            *best = best.min(cur);
            return;
        }
        for j in k..b.len() {
            b.swap(k, j);
            let d = cur.max((a[k] - b[k]).norm());
            if d < *best {
                go(a, b, k + 1, d, best);
            }
            b.swap(k, j);
        }
    }
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut best = f64::INFINITY;
    go(a, &mut b.to_vec(), 0, 0.0, &mut best);
    best
}

/// Zeros of the field counted with winding; `None` unless all windings are
/// positive and sum to `d`.
fn tracked_point(cfg: &FieldConfig, grid: &Grid2D, d: usize) -> Option<ModuliPoint> {
    let mut z = Vec::new();
    for t in track_zeros(cfg, grid) {
        if t.winding <= 0 {
            return None;
        }
        z.extend(std::iter::repeat_n(t.position, t.winding as usize));
    }
    if z.len() != d {
        return None;
    }
    ModuliPoint::from_zeros(&z).ok()
}

/// Hyperbolic evolution from a slowly moving vortex configuration against
/// the geodesic of `oracle`.
///
/// The initial data are the solver's fields at `oracle.point(x0)` with
/// velocity `epsilon * P(ds)`, where `ds` is the central difference of the
/// field family along `qdot0` and `P` the gauge projection, so the Gauss
/// constraint holds at `t = 0`. The run lasts `slow_time_end / epsilon`;
/// tracked zeros at slow time `epsilon t` are compared with the geodesic
/// zeros under the best pairing, and also in the monic chart. Disk only.
pub fn adiabatic_compare(
    grid: &Grid2D,
    oracle: &dyn MetricOracle,
    x0: &[f64],
    qdot0: &[f64],
    epsilon: f64,
    slow_time_end: f64,
    params: &AdiabaticParams,
) -> Result<ComparisonReport> {
    if grid.is_torus() {
        return Err(Error::InvalidParameter("adiabatic comparison runs on the disk".into()));
    }
    if !(epsilon > 0.0) || !(slow_time_end > 0.0) || params.samples == 0 || params.substeps == 0 || !(params.fd_step > 0.0) {
        return Err(Error::InvalidParameter("need epsilon, slow_time_end, fd_step > 0 and samples, substeps >= 1".into()));
    }
    if x0.len() != oracle.dim() || qdot0.len() != oracle.dim() {
        return Err(Error::ShapeMismatch("initial data do not match the metric dimension".into()));
    }
    let tau = params.solver.tau;
    let q0 = oracle.point(x0)?;
    let d = q0.degree();
    let base = solve_disk_chart(q0.chart(), q0.zeros(), grid, &params.solver, None)?;
    let speed = qdot0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let velocity = if speed > 0.0 {
        let step = params.fd_step / speed;
        let at = |s: f64| -> Result<FieldConfig> {
            let x: Vec<f64> = x0.iter().zip(qdot0).map(|(x, v)| x + s * v).collect();
            let q = oracle.point(&x)?;
            Ok(solve_disk_chart(q.chart(), q.zeros(), grid, &params.solver, Some(&base.v))?.cfg)
        };
        let diff = at(step)?.axpy(-1.0, &at(-step)?).scale(0.5 / step);
        gauge_fix_variation(&base.cfg, &diff, grid)?.scale(epsilon)
    } else {
        FieldConfig::zeros(grid)
    };
    let state0 = DynamicState::new(grid, base.cfg, velocity, 0.0)?;

    let t_end = slow_time_end / epsilon;
    let per_sample = ((t_end / params.samples as f64) / (params.cfl * grid.h)).ceil().max(1.0) as usize;
    let steps = per_sample * params.samples;
    let evo = EvolutionParams { dt: t_end / steps as f64, n_steps: steps, sample_every: per_sample, check_every: per_sample, tau };

    let geo = adiabatic_trajectory(oracle, x0, qdot0, slow_time_end, slow_time_end / (params.samples * params.substeps) as f64)?;
    let geo_at = |k: usize| &geo[(k * params.substeps).min(geo.len() - 1)];
    let path_length: f64 = geo.windows(2).map(|w| zero_distance(w[0].q.zeros(), w[1].q.zeros())).sum();
    let chart_path_length: f64 = geo.windows(2).map(|w| chart_distance(&w[0].q, &w[1].q)).sum();

    let (_, _, e0) = state0.energies(grid, tau);
    let g0 = state0.initial_gauss;
    let mut samples = Vec::with_capacity(params.samples + 1);
    let mut record = |k: usize, s: &DynamicState| {
        let g = &geo_at(k).q;
        let tracked = tracked_point(&s.cfg, grid, d);
        let (chart_dev, zero_dev, zs) = match &tracked {
            Some(p) => (chart_distance(p, g), zero_distance(p.zeros(), g.zeros()), p.zeros().to_vec()),
            None => (f64::INFINITY, f64::INFINITY, track_zeros(&s.cfg, grid).iter().map(|t| t.position).collect()),
        };
        samples.push(AdiabaticSample {
            slow_time: epsilon * s.t,
            tracked: zs,
            geodesic: g.zeros().to_vec(),
            chart_dev,
            zero_dev,
            energy: s.energies(grid, tau).2,
            gauss: gauss_residual(s, grid),
        });
    };
    record(0, &state0);
    leapfrog_evolve_with(&state0, grid, &evo, CURRENT_SIGN, |info| {
        if info.step % per_sample == 0 {
            record(info.step / per_sample, info.state);
        }
        true
    })?;

    let dev = samples.iter().map(|s| s.zero_dev).fold(0.0, f64::max);
    let chart_dev = samples.iter().map(|s| s.chart_dev).fold(0.0, f64::max);
    let energy_drift = samples.iter().map(|s| ((s.energy - e0) / e0).abs()).fold(0.0, f64::max);
    let gauss_growth = samples.iter().map(|s| s.gauss - g0).fold(0.0, f64::max);
    Ok(ComparisonReport {
        epsilon,
        slow_time_end,
        dev,
        path_length,
        relative_dev: if path_length > 0.0 { dev / path_length } else { f64::INFINITY },
        chart_dev,
        chart_path_length,
        energy_drift,
        gauss_growth,
        steps,
        dt: evo.dt,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_uses_best_pairing() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let b = [Complex64::new(-1.1, 0.0), Complex64::new(1.0, 0.2)];
        assert!((zero_distance(&a, &b) - 0.2).abs() < 1e-12);
        assert!(zero_distance(&a, &b[..1]).is_infinite());
    }
}
