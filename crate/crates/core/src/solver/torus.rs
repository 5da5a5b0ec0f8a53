//! Flat square torus of side `L`.
//!
//! The singular part of `u` is `l(z) = sum_j d_j [log|theta_1(pi (z - z_j)/L)|^2
//! - 2 pi (y - y_j)^2 / L^2]`, a periodic function with
//! `Delta l = 4 pi sum_j d_j delta_{z_j} - 4 pi d / L^2`, so the smooth part
//! solves `Delta_h v = exp(l + v) - tau + 4 pi d / L^2`. Summing this over the
//! lattice gives the mass identity `sum exp(u) h^2 = tau L^2 - 4 pi d` exactly.
//!
//! A degree-`d` line bundle has no periodic connection. The fields are built in
//! the chart covering `[0, L)^2`, where `phi = s(z) exp(w/2)` with the theta
//! product `s` and `w = v - 2 pi sum_j d_j (y - y_j)^2 / L^2`; links crossing
//! the chart edge absorb the transition phase. Stored arrays are single-valued
//! and periodic. Gauge-invariant quantities (`|phi|`, `b`, energies) do not
//! depend on the chart; `a` and `arg phi` do.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{bradlow_margin, l2, patch_nonfinite, vortex_residual, SolverParams, TaubesSolution, ZeroDivisor};
use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::grid::Grid2D;
use crate::linalg::{neg_laplacian, solve_screened};

const CG_TOL: f64 = 1e-13;
const CG_MAX_ITERS: usize = 2000;
const THETA_TERMS: usize = 12;

/// Jacobi `theta_1(w | i)` with nome `q = exp(-pi)`.
pub fn theta1(w: Complex64) -> Complex64 {
    let q = (-PI).exp();
    let mut s = Complex64::new(0.0, 0.0);
    for n in 0..THETA_TERMS {
        let e = (n as f64 + 0.5).powi(2);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += (((2 * n + 1) as f64) * w).sin() * (sign * 2.0 * q.powf(e));
    }
    s
}

struct Setup {
    side: f64,
    points: Vec<(Complex64, u32)>,
    ell: Vec<f64>,
    degree: f64,
}

impl Setup {
    fn new(divisor: &ZeroDivisor, grid: &Grid2D) -> Self {
        let side = grid.side();
        let points = divisor.reduced(grid).points;
        let mut ell = vec![0.0; grid.len()];
        for j in 0..grid.n {
            for i in 0..grid.n {
                let z = grid.point(i, j);
                ell[grid.idx(i, j)] = points
                    .iter()
                    .map(|&(zj, m)| {
                        let t = theta1((z - zj) * (PI / side)).norm_sqr().ln();
                        m as f64 * (t - 2.0 * PI * (z.im - zj.im).powi(2) / (side * side))
                    })
                    .sum();
            }
        }
        let degree = points.iter().map(|p| p.1 as f64).sum();
        Self { side, points, ell, degree }
    }

    /// Quadratic part of `w` at ordinate `y` of the covering chart.
    fn quad(&self, y: f64) -> f64 {
        let l2 = self.side * self.side;
        self.points.iter().map(|&(zj, m)| -2.0 * PI * m as f64 * (y - zj.im).powi(2) / l2).sum()
    }

    fn section(&self, z: Complex64) -> Complex64 {
        self.points.iter().fold(Complex64::new(1.0, 0.0), |acc, &(zj, m)| {
            acc * theta1((z - zj) * (PI / self.side)).powu(m)
        })
    }
}

fn residual(v: &[f64], s: &Setup, tau: f64, grid: &Grid2D) -> Vec<f64> {
    let mut f = vec![0.0; grid.len()];
    neg_laplacian(v, grid, &mut f);
    let c = tau - 4.0 * PI * s.degree / (s.side * s.side);
    for k in 0..f.len() {
        f[k] = -f[k] - (s.ell[k] + v[k]).exp() + c;
    }
    f
}

pub(super) fn solve(divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<TaubesSolution> {
    params.validate()?;
    let tau = params.tau;
    let margin = bradlow_margin(divisor.degree(), tau, grid.area());
    if margin <= 1e-12 * tau * grid.area() {
        return Err(Error::BradlowViolation { margin });
    }
    let s = Setup::new(divisor, grid);
    let h2 = grid.area_element();
    // constant start matching the mass identity
    let m0: f64 = s.ell.iter().map(|l| l.exp()).sum::<f64>() * h2;
    let mut v = vec![(margin / m0).ln(); grid.len()];
    let mut f = residual(&v, &s, tau, grid);
    let mut res = l2(&f, grid);
    let mut iters = 0;
    while res >= params.tol {
        if iters == params.max_iters {
            return Err(Error::NonConvergence { iters, residual: res });
        }
        iters += 1;
        let w: Vec<f64> = s.ell.iter().zip(&v).map(|(l, v)| (l + v).exp()).collect();
        let delta = solve_screened(grid, &w, &f, CG_TOL, CG_MAX_ITERS)?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(v, d)| v + step * d).collect();
            let ft = residual(&trial, &s, tau, grid);
            let rt = l2(&ft, grid);
            if rt < res || step < 1e-3 {
                v = trial;
                f = ft;
                res = rt;
                break;
            }
            step *= 0.5;
        }
    }
    let u: Vec<f64> = s.ell.iter().zip(&v).map(|(l, v)| l + v).collect();
    let cfg = reconstruct(&s, &v, grid);
    let residuals = vortex_residual(&cfg, tau, grid);
    Ok(TaubesSolution {
        divisor: divisor.reduced(grid),
        tau,
        u,
        v,
        cfg,
        residuals,
        taubes_residual: res,
        newton_iters: iters,
    })
}

fn reconstruct(s: &Setup, v: &[f64], grid: &Grid2D) -> FieldConfig {
    let n = grid.n;
    let h = grid.h;
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    // w in the covering chart; only the ordinate leaves the fundamental domain
    // in a way that matters, since w is periodic in x.
    let w = |i: isize, j: isize| -> f64 {
        let y = (j as f64 + 0.5) * h;
        v[grid.idx(wrap(i), wrap(j))] + s.quad(y)
    };
    let degree = s.degree;
    let mut cfg = FieldConfig::zeros(grid);
    for jj in 0..n {
        for ii in 0..n {
            let (i, j) = (ii as isize, jj as isize);
            let k = grid.idx(ii, jj);
            let z = grid.point(ii, jj);
            cfg.phi[k] = s.section(z) * (0.5 * w(i, j)).exp();

            let d2 = (w(i, j + 1) - w(i, j - 1) + w(i + 1, j + 1) - w(i + 1, j - 1)) / (4.0 * h);
            let mut t1 = -0.5 * d2 * h;
            if ii + 1 == n {
                // phi(z + L) = (-1)^d phi(z)
                t1 += PI * degree;
            }
            cfg.a1[k] = t1 / h;

            let d1 = (w(i + 1, j) - w(i - 1, j) + w(i + 1, j + 1) - w(i - 1, j + 1)) / (4.0 * h);
            let mut t2 = 0.5 * d1 * h;
            if jj + 1 == n {
                // phi(z + iL) = exp(i sum_j d_j (pi - 2 pi (x - x_j)/L)) phi(z)
                t2 += s
                    .points
                    .iter()
                    .map(|&(zj, m)| m as f64 * (PI - 2.0 * PI * (z.re - zj.re) / s.side))
                    .sum::<f64>();
            }
            cfg.a2[k] = t2 / h;
        }
    }
    cfg
}

pub(super) fn reconstruct_from_u(u: &[f64], divisor: &ZeroDivisor, grid: &Grid2D) -> Result<FieldConfig> {
    let s = Setup::new(divisor, grid);
    let mut v: Vec<f64> = u.iter().zip(&s.ell).map(|(u, l)| u - l).collect();
    patch_nonfinite(&mut v, grid);
    Ok(reconstruct(&s, &v, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_quasi_periodicity() {
        let w = Complex64::new(0.3, -0.4);
        let q = (-PI).exp();
        assert!((theta1(w + PI) + theta1(w)).norm() < 1e-12);
        let lhs = theta1(w + Complex64::new(0.0, PI));
        let rhs = -theta1(w) * (Complex64::new(0.0, -2.0) * w).exp() / q;
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
        assert!(theta1(Complex64::new(0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_part_is_periodic() {
        let side = 7.0;
        let zj = Complex64::new(2.0, 5.5);
        let f = |z: Complex64| {
            theta1((z - zj) * (PI / side)).norm_sqr().ln() - 2.0 * PI * (z.im - zj.im).powi(2) / (side * side)
        };
        let z = Complex64::new(1.1, 0.4);
        assert!((f(z) - f(z + side)).abs() < 1e-10);
        assert!((f(z) - f(z + Complex64::new(0.0, side))).abs() < 1e-10);
    }
}
