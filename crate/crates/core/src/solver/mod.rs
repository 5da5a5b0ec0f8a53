//! Vortex solutions with a prescribed zero divisor.
//!
//! Both vortex equations reduce to the scalar Taubes equation for
//! `u = log |phi|^2`,
//!
//! ```text
//! Delta u = exp(u) - tau + 4 pi sum_j d_j delta(z - z_j),
//! ```
//!
//! solved by Newton iteration for a smooth remainder after the logarithmic
//! singularities are split off. The gauge field and the phase of `phi` are
//! then reconstructed in closed form from the remainder, so that
//! `phi = (holomorphic factor) * exp(remainder / 2)` is smooth across zeros.

mod disk;
mod torus;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, EnergyBreakdown, FieldConfig, Orientation};
use crate::grid::{DomainKind, Grid2D};

pub(crate) use disk::check_clearance;
pub use disk::{eval_monic, monic_from_roots, solve_disk_chart, DiskChartSolve, BOUNDARY_CLEARANCE};
pub use torus::theta1;

/// Zeros of `phi` with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroDivisor {
    pub points: Vec<(Complex64, u32)>,
}

impl ZeroDivisor {
    pub fn new(points: Vec<(Complex64, u32)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty divisor: degree must be at least 1".into()));
        }
        for (k, &(z, m)) in points.iter().enumerate() {
            if m == 0 {
                return Err(Error::InvalidParameter(format!("zero multiplicity at {z}")));
            }
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite zero {z}")));
            }
            if points[..k].iter().any(|&(w, _)| w == z) {
                return Err(Error::InvalidParameter(format!("repeated zero {z}; use a multiplicity")));
            }
        }
        Ok(Self { points })
    }

    /// Simple zeros at the given positions.
    pub fn simple(zeros: &[Complex64]) -> Result<Self> {
        Self::new(zeros.iter().map(|&z| (z, 1)).collect())
    }

    pub fn degree(&self) -> u32 {
        self.points.iter().map(|p| p.1).sum()
    }

    /// Zeros listed with repetition.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.points.iter().flat_map(|&(z, m)| std::iter::repeat(z).take(m as usize)).collect()
    }

    /// Positions reduced into the fundamental domain on the torus.
    pub fn reduced(&self, grid: &Grid2D) -> Self {
        Self { points: self.points.iter().map(|&(z, m)| (grid.wrap_position(z), m)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Tolerance on the L2 norm of the discrete Taubes residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Regularisation scale in `log(|z|^2 / (1 + mu |z|^2))`.
    pub delta_smoothing: f64,
    pub tau: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 50, delta_smoothing: 1.0, tau: 1.0 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {} must be positive", self.tau)));
        }
        if !(self.delta_smoothing > 0.0) {
            return Err(Error::InvalidParameter("delta_smoothing must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TaubesSolution {
    pub divisor: ZeroDivisor,
    pub tau: f64,
    /// `log |phi|^2` at the nodes.
    pub u: Vec<f64>,
    /// Smooth Newton unknown (`u` minus the singular part).
    pub v: Vec<f64>,
    pub cfg: FieldConfig,
    /// First-order residuals `(r1, r2)` of the reconstructed lattice fields.
    pub residuals: (f64, f64),
    /// Final L2 residual of the discrete Taubes equation.
    pub taubes_residual: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub divisor: Vec<(f64, f64, u32)>,
    pub tau: f64,
    pub residuals: (f64, f64),
    pub taubes_residual: f64,
    pub energy_breakdown: EnergyBreakdown,
    pub iters: usize,
}

impl TaubesSolution {
    pub fn energy(&self, grid: &Grid2D) -> EnergyBreakdown {
        field::potential_energy(&self.cfg, self.tau, grid)
    }

    /// `sum exp(u) h^2`.
    pub fn mass(&self, grid: &Grid2D) -> f64 {
        self.u.iter().map(|u| u.exp()).sum::<f64>() * grid.area_element()
    }

    pub fn max_modulus_sq(&self) -> f64 {
        self.u.iter().fold(f64::NEG_INFINITY, |m, &u| m.max(u.exp()))
    }

    pub fn summary(&self, grid: &Grid2D) -> SolutionSummary {
        SolutionSummary {
            divisor: self.divisor.points.iter().map(|&(z, m)| (z.re, z.im, m)).collect(),
            tau: self.tau,
            residuals: self.residuals,
            taubes_residual: self.taubes_residual,
            energy_breakdown: self.energy(grid),
            iters: self.newton_iters,
        }
    }
}

/// `tau * vol - 4 pi d`; a torus solution exists iff this is positive.
pub fn bradlow_margin(d: u32, tau: f64, vol: f64) -> f64 {
    tau * vol - 4.0 * PI * d as f64
}

/// Vortex residuals `(r1, r2)`: `|(D_1 + i D_2) phi|` and `|i F_12 - (tau - |phi|^2)/2|`.
pub fn vortex_residual(cfg: &FieldConfig, tau: f64, grid: &Grid2D) -> (f64, f64) {
    field::bogomolny_residuals(cfg, tau, grid, Orientation::Vortex)
}

pub fn antivortex_residual(cfg: &FieldConfig, tau: f64, grid: &Grid2D) -> (f64, f64) {
    field::bogomolny_residuals(cfg, tau, grid, Orientation::AntiVortex)
}

pub fn solve_taubes_disk(divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<TaubesSolution> {
    if grid.is_torus() {
        return Err(Error::InvalidGrid("solve_taubes_disk needs a disk grid".into()));
    }
    disk::solve(divisor, grid, params)
}

pub fn solve_taubes_torus(divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<TaubesSolution> {
    if !grid.is_torus() {
        return Err(Error::InvalidGrid("solve_taubes_torus needs a torus grid".into()));
    }
    torus::solve(divisor, grid, params)
}

pub fn solve_taubes(divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<TaubesSolution> {
    match grid.domain {
        DomainKind::Torus { .. } => solve_taubes_torus(divisor, grid, params),
        DomainKind::Disk { .. } => solve_taubes_disk(divisor, grid, params),
    }
}

/// Rebuild `(a, phi)` from `u = log |phi|^2` and the divisor.
pub fn reconstruct_fields(u: &[f64], divisor: &ZeroDivisor, grid: &Grid2D, params: &SolverParams) -> Result<FieldConfig> {
    if u.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!("u has {} entries on {} nodes", u.len(), grid.len())));
    }
    if grid.is_torus() {
        torus::reconstruct_from_u(u, &divisor.reduced(grid), grid)
    } else {
        disk::reconstruct_from_u(u, divisor, grid, params.delta_smoothing)
    }
}

/// Replace non-finite entries by the mean of their finite 4-neighbours. Used
/// where a node sits exactly on a zero and `log |phi|^2` is `-inf` there.
pub(crate) fn patch_nonfinite(x: &mut [f64], grid: &Grid2D) {
    let bad: Vec<usize> = (0..x.len()).filter(|&k| !x[k].is_finite()).collect();
    for k in bad {
        let (i, j) = (k % grid.n, k / grid.n);
        let mut s = 0.0;
        let mut c = 0.0;
        let nb = [
            grid.prev(i).map(|ii| grid.idx(ii, j)),
            grid.next(i).map(|ii| grid.idx(ii, j)),
            grid.prev(j).map(|jj| grid.idx(i, jj)),
            grid.next(j).map(|jj| grid.idx(i, jj)),
        ];
        for m in nb.into_iter().flatten() {
            if x[m].is_finite() {
                s += x[m];
                c += 1.0;
            }
        }
        x[k] = if c > 0.0 { s / c } else { 0.0 };
    }
}

/// L2 norm with the area element.
pub(crate) fn l2(x: &[f64], grid: &Grid2D) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() * grid.area_element()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins() {
        assert!((bradlow_margin(1, 1.0, 256.0) - (256.0 - 4.0 * PI)).abs() < 1e-12);
        assert!((bradlow_margin(1, 1.0, 256.0) - 243.4336).abs() < 1e-3);
        assert!(bradlow_margin(21, 1.0, 256.0) < 0.0);
        // g -> t^2 g scales the volume; the margin's tau*vol part scales as t^2
        let (d, tau, vol, t) = (3, 0.4, 50.0, 3.0);
        let m1 = bradlow_margin(d, tau, vol) + 4.0 * PI * d as f64;
        let m2 = bradlow_margin(d, tau, t * t * vol) + 4.0 * PI * d as f64;
        assert!((m2 - t * t * m1).abs() < 1e-9);
    }

    #[test]
    fn divisor_contract() {
        assert!(ZeroDivisor::new(vec![]).is_err());
        let z = Complex64::new(1.0, 2.0);
        assert!(ZeroDivisor::new(vec![(z, 1), (z, 2)]).is_err());
        assert!(ZeroDivisor::new(vec![(z, 0)]).is_err());
        let d = ZeroDivisor::new(vec![(z, 2), (Complex64::new(0.0, 0.0), 1)]).unwrap();
        assert_eq!(d.degree(), 3);
        assert_eq!(d.expanded().len(), 3);
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        assert!(SolverParams { tau: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverParams { tol: 0.0, ..Default::default() }.validate().is_err());
    }
}
