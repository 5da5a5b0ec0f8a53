//! Plane surrogate: the box `[-R, R]^2` with `u = 0` on its outer ring.
//!
//! Split `u = log|P|^2 - g + v` with `P` the monic polynomial of the zeros and
//! `g = sum_j log(1 + mu |z - z_j|^2)`. The lattice problem is
//! `Delta_h (v - g) = |P|^2 exp(v - g) - tau`, so the smooth combination
//! `v - g` is independent of the regulariser and depends smoothly on the
//! polynomial coefficients, also where zeros coincide.

use num_complex::Complex64;

use super::{l2, patch_nonfinite, SolverParams, TaubesSolution, ZeroDivisor};
use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::grid::{DomainKind, Grid2D};
use crate::linalg::{laplacian_with_boundary, solve_screened};
use crate::solver::vortex_residual;

/// Minimum distance from a zero to the edge of the box.
pub const BOUNDARY_CLEARANCE: f64 = 3.0;

const CG_TOL: f64 = 1e-13;
const CG_MAX_ITERS: usize = 2000;

/// Monic coefficients `(c_1, ..., c_d)` of `prod (z - z_j)`.
pub fn monic_from_roots(zeros: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in zeros {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c.remove(0);
    c
}

#[inline]
pub fn eval_monic(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

/// Result of a disk solve parameterised by polynomial coefficients.
#[derive(Debug, Clone)]
pub struct DiskChartSolve {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub cfg: FieldConfig,
    pub iters: usize,
    pub residual: f64,
}

struct Setup {
    /// `|P|^2 / prod (1 + mu |z - z_j|^2)`
    e0: Vec<f64>,
    g: Vec<f64>,
    lap_g: Vec<f64>,
    log_p2: Vec<f64>,
}

fn setup(coeffs: &[Complex64], zeros: &[Complex64], grid: &Grid2D, mu: f64) -> Setup {
    let len = grid.len();
    let mut g = vec![0.0; len];
    let mut log_p2 = vec![0.0; len];
    for j in 0..grid.n {
        for i in 0..grid.n {
            let z = grid.point(i, j);
            let k = grid.idx(i, j);
            g[k] = zeros.iter().map(|&zj| (1.0 + mu * (z - zj).norm_sqr()).ln()).sum();
            log_p2[k] = eval_monic(coeffs, z).norm_sqr().ln();
        }
    }
    let lap_g = laplacian_with_boundary(&g, grid);
    let e0 = log_p2.iter().zip(&g).map(|(l, g)| (l - g).exp()).collect();
    Setup { e0, g, lap_g, log_p2 }
}

fn residual(v: &[f64], s: &Setup, tau: f64, grid: &Grid2D) -> Vec<f64> {
    let mut f = laplacian_with_boundary(v, grid);
    for j in 0..grid.n {
        for i in 0..grid.n {
            let k = grid.idx(i, j);
            f[k] = if grid.is_boundary(i, j) { 0.0 } else { f[k] - s.e0[k] * v[k].exp() + tau - s.lap_g[k] };
        }
    }
    f
}

pub(crate) fn check_clearance(zeros: &[Complex64], grid: &Grid2D) -> Result<()> {
    let DomainKind::Disk { radius } = grid.domain else { unreachable!() };
    for z in zeros {
        let clearance = radius - z.re.abs().max(z.im.abs());
        if clearance < BOUNDARY_CLEARANCE {
            return Err(Error::ZeroTooCloseToBoundary { position: format!("{z}"), clearance });
        }
    }
    Ok(())
}

/// Newton solve for the disk problem with zeros given by monic coefficients.
/// `zeros` (with repetition) only enter the regulariser and the boundary check.
pub fn solve_disk_chart(
    coeffs: &[Complex64],
    zeros: &[Complex64],
    grid: &Grid2D,
    params: &SolverParams,
    init: Option<&[f64]>,
) -> Result<DiskChartSolve> {
    params.validate()?;
    check_clearance(zeros, grid)?;
    let tau = params.tau;
    let s = setup(coeffs, zeros, grid, params.delta_smoothing);
    let mut v = match init {
        Some(v0) if v0.len() == grid.len() => v0.to_vec(),
        _ => vec![0.0; grid.len()],
    };
    // Dirichlet data: u = 0 on the outer ring.
    for j in 0..grid.n {
        for i in 0..grid.n {
            if grid.is_boundary(i, j) {
                let k = grid.idx(i, j);
                v[k] = s.g[k] - s.log_p2[k];
            }
        }
    }
    let mut f = residual(&v, &s, tau, grid);
    let mut res = l2(&f, grid);
    let mut iters = 0;
    while res >= params.tol {
        if iters == params.max_iters {
            return Err(Error::NonConvergence { iters, residual: res });
        }
        iters += 1;
        let w: Vec<f64> = s.e0.iter().zip(&v).map(|(e, v)| e * v.exp()).collect();
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
    let u: Vec<f64> = (0..grid.len()).map(|k| s.log_p2[k] - s.g[k] + v[k]).collect();
    let cfg = reconstruct(coeffs, &v, &s.g, grid);
    Ok(DiskChartSolve { v, u, cfg, iters, residual: res })
}

/// Build `(a, phi)` with `phi = P exp(w / 2)`, `w = v - g = u - log|P|^2`, and
/// `a = (-d_2 w, d_1 w) / 2`, the connection for which the holomorphic factor
/// drops out of `(D_1 + i D_2) phi`.
fn reconstruct(coeffs: &[Complex64], v: &[f64], g: &[f64], grid: &Grid2D) -> FieldConfig {
    let n = grid.n as isize;
    let h = grid.h;
    let w = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n || j >= n {
            // outside the box u is taken as 0
            let z = Complex64::new(grid.origin() + (i as f64 + 0.5) * h, grid.origin() + (j as f64 + 0.5) * h);
            -eval_monic(coeffs, z).norm_sqr().ln()
        } else {
            let k = grid.idx(i as usize, j as usize);
            v[k] - g[k]
        }
    };
    let mut cfg = FieldConfig::zeros(grid);
    for jj in 0..grid.n {
        for ii in 0..grid.n {
            let (i, j) = (ii as isize, jj as isize);
            let k = grid.idx(ii, jj);
            cfg.phi[k] = eval_monic(coeffs, grid.point(ii, jj)) * (0.5 * w(i, j)).exp();
            if ii + 1 < grid.n {
                let d2 = (w(i, j + 1) - w(i, j - 1) + w(i + 1, j + 1) - w(i + 1, j - 1)) / (4.0 * h);
                cfg.a1[k] = -0.5 * d2;
            }
            if jj + 1 < grid.n {
                let d1 = (w(i + 1, j) - w(i - 1, j) + w(i + 1, j + 1) - w(i - 1, j + 1)) / (4.0 * h);
                cfg.a2[k] = 0.5 * d1;
            }
        }
    }
    cfg
}

pub(super) fn solve(divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<TaubesSolution> {
    let zeros = divisor.expanded();
    let coeffs = monic_from_roots(&zeros);
    let out = solve_disk_chart(&coeffs, &zeros, grid, params, None)?;
    let residuals = vortex_residual(&out.cfg, params.tau, grid);
    Ok(TaubesSolution {
        divisor: divisor.clone(),
        tau: params.tau,
        u: out.u,
        v: out.v,
        cfg: out.cfg,
        residuals,
        taubes_residual: out.residual,
        newton_iters: out.iters,
    })
}

pub(super) fn reconstruct_from_u(u: &[f64], divisor: &ZeroDivisor, grid: &Grid2D, mu: f64) -> Result<FieldConfig> {
    let zeros = divisor.expanded();
    let coeffs = monic_from_roots(&zeros);
    let s = setup(&coeffs, &zeros, grid, mu);
    let mut v: Vec<f64> = (0..grid.len()).map(|k| u[k] - s.log_p2[k] + s.g[k]).collect();
    patch_nonfinite(&mut v, grid);
    Ok(reconstruct(&coeffs, &v, &s.g, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monic_coefficients() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 1.0)];
        let c = monic_from_roots(&z);
        for &r in &z {
            assert!(eval_monic(&c, r).norm() < 1e-14);
        }
        assert!((c[0] + z[0] + z[1]).norm() < 1e-14);
        assert!((c[1] - z[0] * z[1]).norm() < 1e-14);
    }
}
