use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{MetricOracle, ModuliPoint};
use crate::error::{Error, Result};

/// A point on a geodesic: coordinates `x` of the oracle's chart, velocity
/// `qdot` in those coordinates per unit slow time, and the moduli point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub qdot: Vec<f64>,
    pub q: ModuliPoint,
}

impl GeodesicState {
    pub fn new(oracle: &dyn MetricOracle, x: Vec<f64>, qdot: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != oracle.dim() || qdot.len() != oracle.dim() {
            return Err(Error::ShapeMismatch(format!("state of size {} / {} for a {}-dimensional metric", x.len(), qdot.len(), oracle.dim())));
        }
        let q = oracle.point(&x)?;
        Ok(Self { t, x, qdot, q })
    }
}

/// `1/2 qdot^T g(x) qdot`.
pub fn kinetic_scalar(oracle: &dyn MetricOracle, x: &[f64], qdot: &[f64]) -> Result<f64> {
    let g = oracle.metric(x)?;
    let v = DVector::from_column_slice(qdot);
    Ok(0.5 * v.dot(&(&g * &v)))
}

/// Central differences `d_l g` for every coordinate `l`.
fn metric_derivatives(oracle: &dyn MetricOracle, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let e = oracle.fd_step();
    (0..x.len())
        .map(|l| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[l] += e;
            xm[l] -= e;
            Ok((oracle.metric(&xp)? - oracle.metric(&xm)?) / (2.0 * e))
        })
        .collect()
}

/// Geodesic acceleration `-Gamma^k_ij v^i v^j`.
fn acceleration(oracle: &dyn MetricOracle, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let dim = x.len();
    let g = oracle.metric(x)?;
    let dg = metric_derivatives(oracle, x)?;
    let vv = DVector::from_column_slice(v);
    // lowered: sum_ij (d_i g_kj) v^i v^j - 1/2 sum_ij (d_k g_ij) v^i v^j
    let mut low = DVector::zeros(dim);
    let mut dgv = DMatrix::zeros(dim, dim);
    for (i, d) in dg.iter().enumerate() {
        dgv += d * v[i];
    }
    low += &dgv * &vv;
    for k in 0..dim {
        low[k] -= 0.5 * vv.dot(&(&dg[k] * &vv));
    }
    let a = g.lu().solve(&low).ok_or(Error::MetricNotPositive { min_eigenvalue: 0.0 })?;
    Ok(a.iter().map(|x| -x).collect())
}

/// One classical Runge–Kutta step of the geodesic equation
/// `x'' = -Gamma(x)(x', x')`, Christoffel symbols from central differences
/// of the oracle. A negative `h_step` integrates backwards.
pub fn geodesic_step(state: &GeodesicState, h_step: f64, oracle: &dyn MetricOracle) -> Result<GeodesicState> {
    let dim = state.x.len();
    let f = |x: &[f64], v: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> { Ok((v.to_vec(), acceleration(oracle, x, v)?)) };
    let shift = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let (k1x, k1v) = f(&state.x, &state.qdot)?;
    let (k2x, k2v) = f(&shift(&state.x, &k1x, 0.5 * h_step), &shift(&state.qdot, &k1v, 0.5 * h_step))?;
    let (k3x, k3v) = f(&shift(&state.x, &k2x, 0.5 * h_step), &shift(&state.qdot, &k2v, 0.5 * h_step))?;
    let (k4x, k4v) = f(&shift(&state.x, &k3x, h_step), &shift(&state.qdot, &k3v, h_step))?;
    let mut x = state.x.clone();
    let mut v = state.qdot.clone();
    for k in 0..dim {
        x[k] += h_step / 6.0 * (k1x[k] + 2.0 * k2x[k] + 2.0 * k3x[k] + k4x[k]);
        v[k] += h_step / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
    }
    let q = oracle.point(&x)?;
    Ok(GeodesicState { t: state.t + h_step, x, qdot: v, q })
}

fn step_count(t_end: f64, h_step: f64) -> Result<usize> {
    if !(h_step > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("need h_step > 0 and t_end >= 0, got {h_step}, {t_end}")));
    }
    Ok((t_end / h_step - 1e-9).ceil().max(0.0) as usize)
}

/// Geodesic from `(x0, qdot0)` sampled at every step up to slow time `t_end`.
/// The last step is shortened to land on `t_end`.
pub fn adiabatic_trajectory(oracle: &dyn MetricOracle, x0: &[f64], qdot0: &[f64], t_end: f64, h_step: f64) -> Result<Vec<GeodesicState>> {
    let steps = step_count(t_end, h_step)?;
    let mut out = vec![GeodesicState::new(oracle, x0.to_vec(), qdot0.to_vec(), 0.0)?];
    for k in 0..steps {
        let last = out.last().unwrap();
        let h = if k + 1 == steps { t_end - last.t } else { h_step };
        let next = geodesic_step(last, h, oracle)?;
        out.push(next);
    }
    Ok(out)
}

/// Independent integrator: discrete Euler–Lagrange equations of the midpoint
/// discrete Lagrangian `L_d(x0, x1) = h/2 v^T g((x0 + x1)/2) v`,
/// `v = (x1 - x0)/h`. Second order and symplectic; the implicit step is
/// solved by fixed-point iteration.
pub fn variational_trajectory(oracle: &dyn MetricOracle, x0: &[f64], qdot0: &[f64], t_end: f64, h_step: f64) -> Result<Vec<GeodesicState>> {
    let steps = step_count(t_end, h_step)?;
    let dim = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut p = oracle.metric(x0)? * DVector::from_column_slice(qdot0);
    let mut out = vec![GeodesicState::new(oracle, x0.to_vec(), qdot0.to_vec(), 0.0)?];
    // sum_ij v^i (d_l g_ij) v^j for each l
    let quad = |m: &DVector<f64>, v: &DVector<f64>| -> Result<DVector<f64>> {
        let dg = metric_derivatives(oracle, m.as_slice())?;
        Ok(DVector::from_iterator(dim, dg.iter().map(|d| v.dot(&(d * v)))))
    };
    let mut t = 0.0;
    for k in 0..steps {
        let h = if k + 1 == steps { t_end - t } else { h_step };
        let g0 = oracle.metric(x.as_slice())?;
        let mut v = g0.lu().solve(&p).ok_or(Error::MetricNotPositive { min_eigenvalue: 0.0 })?;
        let mut converged = false;
        for _ in 0..100 {
            let m = &x + &v * (0.5 * h);
            let g = oracle.metric(m.as_slice())?;
            let rhs = &p + quad(&m, &v)? * (0.25 * h);
            let vn = g.lu().solve(&rhs).ok_or(Error::MetricNotPositive { min_eigenvalue: 0.0 })?;
            let change = (&vn - &v).norm();
            v = vn;
            if change <= 1e-14 * (1.0 + v.norm()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iters: 100, residual: f64::NAN });
        }
        let m = &x + &v * (0.5 * h);
        let g = oracle.metric(m.as_slice())?;
        p = &g * &v + quad(&m, &v)? * (0.25 * h);
        x += &v * h;
        t += h;
        let gx = oracle.metric(x.as_slice())?;
        let qdot = gx.lu().solve(&p).ok_or(Error::MetricNotPositive { min_eigenvalue: 0.0 })?;
        out.push(GeodesicState { t, x: x.as_slice().to_vec(), qdot: qdot.as_slice().to_vec(), q: oracle.point(x.as_slice())? });
    }
    Ok(out)
}

/// Zero positions along a trajectory with labels continued by nearest
/// neighbour matching between consecutive samples.
pub fn labelled_zeros(zeros: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(zeros.len());
    for z in zeros {
        let Some(prev) = out.last() else {
            out.push(z.clone());
            continue;
        };
        let mut remaining = z.clone();
        let mut next = Vec::with_capacity(z.len());
        for p in prev {
            let (k, _) = remaining.iter().enumerate().map(|(k, c)| (k, (c - p).norm())).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            next.push(remaining.swap_remove(k));
        }
        out.push(next);
    }
    out
}

/// Angle in degrees, in `[0, 180]`, between the incoming and outgoing
/// relative velocities `d(z_1 - z_2)/dt` of a two-vortex trajectory,
/// taken from the first and last pair of samples.
pub fn deflection_angle(trajectory: &[GeodesicState]) -> Result<f64> {
    let rel = relative_positions(trajectory)?;
    let m = rel.len();
    let vin = rel[1] - rel[0];
    let vout = rel[m - 1] - rel[m - 2];
    let c = (vin.re * vout.re + vin.im * vout.im) / (vin.norm() * vout.norm());
    Ok(c.clamp(-1.0, 1.0).acos().to_degrees())
}

/// Smallest half-separation `|z_1 - z_2| / 2` along a two-vortex trajectory.
pub fn closest_approach(trajectory: &[GeodesicState]) -> Result<f64> {
    Ok(relative_positions(trajectory)?.iter().map(|r| 0.5 * r.norm()).fold(f64::INFINITY, f64::min))
}

fn relative_positions(trajectory: &[GeodesicState]) -> Result<Vec<Complex64>> {
    if trajectory.len() < 4 || trajectory.iter().any(|s| s.q.degree() != 2) {
        return Err(Error::InvalidParameter("scattering needs a two-vortex trajectory with at least 4 samples".into()));
    }
    let zs: Vec<Vec<Complex64>> = trajectory.iter().map(|s| s.q.zeros().to_vec()).collect();
    Ok(labelled_zeros(&zs).iter().map(|z| z[0] - z[1]).collect())
}

/// [`deflection_angle`] of a trajectory that passes through the ball of
/// radius `ball_radius` around coincidence. Errors if half the separation
/// never drops below `ball_radius` or the trajectory does not start and end
/// outside that ball.
pub fn scattering_angle(trajectory: &[GeodesicState], ball_radius: f64) -> Result<f64> {
    let rel = relative_positions(trajectory)?;
    let half = |r: Complex64| 0.5 * r.norm();
    let closest = rel.iter().map(|&r| half(r)).fold(f64::INFINITY, f64::min);
    if closest >= ball_radius || half(rel[0]) < ball_radius || half(*rel.last().unwrap()) < ball_radius {
        return Err(Error::NoEncounter { radius: ball_radius });
    }
    deflection_angle(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{FlatMetric, RadialMetric};

    #[test]
    fn flat_metric_gives_straight_lines() {
        let m = FlatMetric { dim: 2, scale: std::f64::consts::PI };
        let traj = adiabatic_trajectory(&m, &[1.0, -2.0], &[0.3, 0.7], 5.0, 0.1).unwrap();
        let last = traj.last().unwrap();
        assert!((last.t - 5.0).abs() < 1e-12);
        assert!((last.x[0] - 2.5).abs() < 1e-12 && (last.x[1] - 1.5).abs() < 1e-12);
    }

    /// Conformal metric `F(|w|) I` with `F = (1 + |w|^2)^(-1/2)`.
    fn curved() -> RadialMetric {
        let rho: Vec<f64> = (0..401).map(|k| k as f64 * 0.05).collect();
        let f = rho.iter().map(|r| 1.0 / (1.0 + r * r).sqrt()).collect();
        RadialMetric::from_samples(rho, f, 0.0).unwrap()
    }

    #[test]
    fn kinetic_scalar_is_conserved_and_steps_reverse() {
        let m = curved();
        let s0 = GeodesicState::new(&m, vec![-3.0, 0.4], vec![1.0, 0.0], 0.0).unwrap();
        let e0 = kinetic_scalar(&m, &s0.x, &s0.qdot).unwrap();
        let mut s = s0.clone();
        for _ in 0..1000 {
            s = geodesic_step(&s, 0.005, &m).unwrap();
        }
        let e = kinetic_scalar(&m, &s.x, &s.qdot).unwrap();
        assert!(((e - e0) / e0).abs() < 1e-6, "{e} vs {e0}");
        let there = geodesic_step(&s0, 0.01, &m).unwrap();
        let back = geodesic_step(&there, -0.01, &m).unwrap();
        for k in 0..2 {
            assert!((back.x[k] - s0.x[k]).abs() < 1e-8 && (back.qdot[k] - s0.qdot[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn variational_and_runge_kutta_agree() {
        let m = curved();
        let a = adiabatic_trajectory(&m, &[-3.0, 0.4], &[1.0, 0.0], 6.0, 0.01).unwrap();
        let b = variational_trajectory(&m, &[-3.0, 0.4], &[1.0, 0.0], 6.0, 0.01).unwrap();
        assert_eq!(a.len(), b.len());
        let dev = a.iter().zip(&b).map(|(p, q)| (p.x[0] - q.x[0]).hypot(p.x[1] - q.x[1])).fold(0.0, f64::max);
        assert!(dev < 1e-4, "{dev}");
    }

    #[test]
    fn head_on_in_conformal_slice_scatters_at_right_angles() {
        let m = curved();
        let traj = adiabatic_trajectory(&m, &[-4.0, 0.0], &[1.0, 0.0], 8.0, 0.01).unwrap();
        let angle = scattering_angle(&traj, 0.5).unwrap();
        assert!((angle - 90.0).abs() < 1e-6, "{angle}");
        let back = adiabatic_trajectory(&m, &traj.last().unwrap().x, &traj.last().unwrap().qdot.iter().map(|v| -v).collect::<Vec<_>>(), 8.0, 0.01).unwrap();
        assert!((scattering_angle(&back, 0.5).unwrap() - angle).abs() < 1e-6);
        assert!(matches!(scattering_angle(&traj[..10], 0.5), Err(Error::NoEncounter { .. })));
    }
}
