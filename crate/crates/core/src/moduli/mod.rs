//! The kinetic metric on the vortex moduli space, its geodesics and
//! two-vortex scattering.
//!
//! A tangent vector to the space of solutions is a variation
//! `(da1, da2, dphi)`. Its kinetic length is the lattice L2 norm after
//! removing the component along gauge orbits ([`gauge_fix_variation`]);
//! finite differences of the solver's field family then give the metric
//! ([`t_metric`]).

mod geodesic;
mod oracle;
mod point;

pub use geodesic::{
    adiabatic_trajectory, closest_approach, deflection_angle, geodesic_step, kinetic_scalar, labelled_zeros, scattering_angle,
    variational_trajectory, GeodesicState,
};
pub use oracle::{FlatMetric, MetricOracle, RadialMetric, SlicedMetric, SolverMetric};
pub use point::{roots, ModuliPoint};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::grid::Grid2D;
use crate::linalg::{neg_laplacian_natural, solve_screened_with, Boundary};
use crate::solver::{solve_disk_chart, solve_taubes_torus, SolverParams, ZeroDivisor};

/// Default finite-difference step in moduli coordinates.
pub const DEFAULT_FD_STEP: f64 = 1e-2;

const GAUGE_CG_TOL: f64 = 1e-12;
const GAUGE_CG_MAX_ITERS: usize = 2000;

/// Real coordinates on the moduli space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// `(Re c_1, Im c_1, ..., Re c_d, Im c_d)` of the monic chart.
    Chart,
    /// `(Re z_1, Im z_1, ...)` in the point's canonical zero order.
    Zeros,
}

/// Kinetic-energy inner product `sum (da1 da1' + da2 da2' + Re(conj dphi dphi')) h^2`
/// over existing links and all nodes.
pub fn l2_inner(x: &FieldConfig, y: &FieldConfig, grid: &Grid2D) -> f64 {
    let n = grid.n;
    let mut total = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for i in 0..n {
            let k = grid.idx(i, j);
            if grid.has_link(i, j, 0) {
                row += x.a1[k] * y.a1[k];
            }
            if grid.has_link(i, j, 1) {
                row += x.a2[k] * y.a2[k];
            }
            row += (x.phi[k].conj() * y.phi[k]).re;
        }
        total += row;
    }
    total * grid.area_element()
}

/// Infinitesimal gauge direction `(d_1 chi, d_2 chi, -i chi phi)` at `cfg`.
pub fn gauge_direction(cfg: &FieldConfig, chi: &[f64], grid: &Grid2D) -> FieldConfig {
    let n = grid.n;
    let h = grid.h;
    let mut out = FieldConfig::zeros(grid);
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            if let Some(ip) = grid.next(i) {
                out.a1[k] = (chi[grid.idx(ip, j)] - chi[k]) / h;
            }
            if let Some(jp) = grid.next(j) {
                out.a2[k] = (chi[grid.idx(i, jp)] - chi[k]) / h;
            }
            out.phi[k] = Complex64::new(0.0, -chi[k]) * cfg.phi[k];
        }
    }
    out
}

/// Lattice divergence `(da1(x) - da1(x - e1) + da2(x) - da2(x - e2)) / h`,
/// with links outside the box counting as zero: minus the adjoint of the
/// forward gradient.
pub fn divergence(a1: &[f64], a2: &[f64], grid: &Grid2D) -> Vec<f64> {
    let n = grid.n;
    let inv_h = 1.0 / grid.h;
    let mut div = vec![0.0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            if let Some(ip) = grid.next(i) {
                div[k] += a1[k] * inv_h;
                div[grid.idx(ip, j)] -= a1[k] * inv_h;
            }
            if let Some(jp) = grid.next(j) {
                div[k] += a2[k] * inv_h;
                div[grid.idx(i, jp)] -= a2[k] * inv_h;
            }
        }
    }
    div
}

/// L2-orthogonal projection of a variation onto the complement of the gauge
/// orbit through `cfg`: returns `dcfg - (d_1 chi, d_2 chi, -i chi phi)` with
/// `(-Delta_h + |phi|^2) chi = -div da - Im(conj(phi) dphi)`. On the disk `chi`
/// is free on every node, so all gauge directions of the box are removed.
pub fn gauge_fix_variation(cfg: &FieldConfig, dcfg: &FieldConfig, grid: &Grid2D) -> Result<FieldConfig> {
    cfg.check(grid)?;
    dcfg.check(grid)?;
    let div = divergence(&dcfg.a1, &dcfg.a2, grid);
    let rhs: Vec<f64> = (0..grid.len()).map(|k| -div[k] - (cfg.phi[k].conj() * dcfg.phi[k]).im).collect();
    let w: Vec<f64> = cfg.phi.iter().map(|z| z.norm_sqr()).collect();
    let chi = solve_screened_with(grid, &w, &rhs, Boundary::Natural, GAUGE_CG_TOL, GAUGE_CG_MAX_ITERS)?;
    Ok(dcfg.axpy(-1.0, &gauge_direction(cfg, &chi, grid)))
}

/// `(-Delta_h + |phi|^2) chi`, the Gram operator of the gauge directions.
pub fn gauge_operator(cfg: &FieldConfig, chi: &[f64], grid: &Grid2D) -> Vec<f64> {
    let mut y = vec![0.0; grid.len()];
    neg_laplacian_natural(chi, grid, &mut y);
    y.iter_mut().zip(&cfg.phi).zip(chi).for_each(|((y, p), c)| *y += p.norm_sqr() * c);
    y
}

/// Kinetic metric at a moduli point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TMetric {
    /// Row-major `2d x 2d`.
    pub g: Vec<f64>,
    pub dim: usize,
    pub eval_point: ModuliPoint,
    pub coordinates: Coordinates,
    /// Zeros closer than `4 fd_step`: finite differences straddle a near
    /// coincidence and the value should be treated with care.
    pub near_coincidence: bool,
}

impl TMetric {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.g)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.g[k * self.dim + k]).sum()
    }
}

/// Rejects matrices with an eigenvalue below `1e-8 trace / dim`.
pub(crate) fn check_spd(g: &DMatrix<f64>) -> Result<()> {
    let dim = g.nrows();
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-8 * g.trace() / dim as f64) {
        return Err(Error::MetricNotPositive { min_eigenvalue: min });
    }
    Ok(())
}

/// Solved field family over a moduli coordinate patch.
pub(crate) struct FieldFamily<'a> {
    pub grid: &'a Grid2D,
    pub params: SolverParams,
    pub coordinates: Coordinates,
    /// Warm start for disk solves.
    pub init: Option<Vec<f64>>,
}

impl FieldFamily<'_> {
    /// Coordinates of `q`.
    pub fn coords(&self, q: &ModuliPoint) -> Vec<f64> {
        match self.coordinates {
            Coordinates::Chart => q.real_chart(),
            Coordinates::Zeros => q.real_zeros(),
        }
    }

    /// Point with the given coordinates. Zero coordinates keep their order.
    fn point(&self, x: &[f64]) -> Result<(ModuliPoint, Vec<Complex64>)> {
        match self.coordinates {
            Coordinates::Chart => {
                let q = ModuliPoint::from_real_chart(x)?;
                let z = q.zeros().to_vec();
                Ok((q, z))
            }
            Coordinates::Zeros => {
                let z: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                Ok((ModuliPoint::from_zeros(&z)?, z))
            }
        }
    }

    /// Solver fields at coordinates `x`; updates the warm start.
    pub fn fields(&mut self, x: &[f64]) -> Result<FieldConfig> {
        let (q, zeros) = self.point(x)?;
        if self.grid.is_torus() {
            if self.coordinates != Coordinates::Zeros {
                return Err(Error::InvalidParameter("torus metrics use zero coordinates".into()));
            }
            let divisor = ZeroDivisor::simple(&zeros)?;
            return Ok(solve_taubes_torus(&divisor, self.grid, &self.params)?.cfg);
        }
        let out = solve_disk_chart(q.chart(), q.zeros(), self.grid, &self.params, self.init.as_deref())?;
        self.init = Some(out.v);
        Ok(out.cfg)
    }

    /// Gauge-fixed central-difference tangent vectors along every coordinate.
    pub fn tangents(&mut self, x: &[f64], fd_step: f64) -> Result<(FieldConfig, Vec<FieldConfig>)> {
        let base = self.fields(x)?;
        let mut out = Vec::with_capacity(x.len());
        for mu in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[mu] += fd_step;
            xm[mu] -= fd_step;
            let fp = self.fields(&xp)?;
            let fm = self.fields(&xm)?;
            let diff = fp.axpy(-1.0, &fm).scale(0.5 / fd_step);
            out.push(gauge_fix_variation(&base, &diff, self.grid)?);
        }
        Ok((base, out))
    }
}

/// Gram matrix of tangent vectors.
pub(crate) fn gram(t: &[FieldConfig], grid: &Grid2D) -> DMatrix<f64> {
    let dim = t.len();
    let mut g = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = l2_inner(&t[a], &t[b], grid);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Kinetic metric `g_{mu nu} = <P d_mu s, P d_nu s>` at `q`, where `d_mu s`
/// is the central difference (step `fd_step`) of the solver's fields along
/// coordinate `mu` and `P` is [`gauge_fix_variation`].
///
/// Zero coordinates need zeros separated by more than `2 fd_step`; the chart
/// is smooth across coincidences. The torus supports zero coordinates only.
pub fn t_metric(q: &ModuliPoint, grid: &Grid2D, params: &SolverParams, fd_step: f64, coordinates: Coordinates) -> Result<TMetric> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::InvalidParameter(format!("fd_step = {fd_step} must be positive")));
    }
    let sep = q.min_separation();
    if coordinates == Coordinates::Zeros && sep <= 2.0 * fd_step {
        return Err(Error::NearCoincidence { separation: sep, threshold: 2.0 * fd_step });
    }
    let mut fam = FieldFamily { grid, params: *params, coordinates, init: None };
    let x = fam.coords(q);
    let (_, t) = fam.tangents(&x, fd_step)?;
    let g = gram(&t, grid);
    check_spd(&g)?;
    let dim = x.len();
    Ok(TMetric {
        g: g.transpose().as_slice().to_vec(),
        dim,
        eval_point: q.clone(),
        coordinates,
        near_coincidence: sep < 4.0 * fd_step,
    })
}

/// Pulls a chart metric back to zero coordinates: `J^T g J`.
pub fn chart_to_zero_metric(g: &TMetric) -> TMetric {
    let dim = g.dim;
    let jac = DMatrix::from_row_slice(dim, dim, &g.eval_point.chart_jacobian());
    let gz = jac.transpose() * g.matrix() * jac;
    TMetric { g: gz.transpose().as_slice().to_vec(), coordinates: Coordinates::Zeros, ..g.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vortex_cfg(grid: &Grid2D) -> FieldConfig {
        let out = solve_disk_chart(&[Complex64::new(-0.3, 0.2)], &[Complex64::new(0.3, -0.2)], grid, &SolverParams::default(), None).unwrap();
        out.cfg
    }

    fn smooth(grid: &Grid2D, s: f64) -> Vec<f64> {
        (0..grid.len()).map(|k| ((k % grid.n) as f64 * 0.2 * s).sin() * ((k / grid.n) as f64 * 0.13).cos()).collect()
    }

    #[test]
    fn pure_gauge_is_annihilated_and_projection_is_idempotent() {
        let g = Grid2D::disk(6.0, 48).unwrap();
        let cfg = vortex_cfg(&g);
        let pure = gauge_direction(&cfg, &smooth(&g, 1.0), &g);
        let out = gauge_fix_variation(&cfg, &pure, &g).unwrap();
        assert!(l2_inner(&out, &out, &g).sqrt() < 1e-8 * l2_inner(&pure, &pure, &g).sqrt());

        let mut v = FieldConfig::zeros(&g);
        v.a1 = smooth(&g, 0.7);
        v.phi = smooth(&g, 1.3).iter().map(|x| Complex64::new(*x, 0.5 * x)).collect();
        let p1 = gauge_fix_variation(&cfg, &v, &g).unwrap();
        let p2 = gauge_fix_variation(&cfg, &p1, &g).unwrap();
        let d = p2.axpy(-1.0, &p1);
        assert!(l2_inner(&d, &d, &g).sqrt() < 1e-8 * l2_inner(&p1, &p1, &g).sqrt());
        // orthogonal to a family of gauge directions
        for s in [0.3, 1.1, 2.9] {
            let gd = gauge_direction(&cfg, &smooth(&g, s), &g);
            assert!(l2_inner(&p1, &gd, &g).abs() < 1e-8 * l2_inner(&gd, &gd, &g).sqrt());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn projection_contracts(s1 in 0.1f64..3.0, s2 in 0.1f64..3.0, c in -2.0f64..2.0) {
            let g = Grid2D::torus(6.0, 16).unwrap();
            let mut cfg = FieldConfig::vacuum(&g, 1.0);
            cfg.phi.iter_mut().enumerate().for_each(|(k, p)| *p *= 0.5 + 0.4 * (k as f64 * 0.1).cos());
            let mut v = FieldConfig::zeros(&g);
            v.a1 = smooth(&g, s1);
            v.a2 = smooth(&g, s2);
            v.phi = smooth(&g, s1 + s2).iter().map(|x| Complex64::new(c * x, *x)).collect();
            let p = gauge_fix_variation(&cfg, &v, &g).unwrap();
            prop_assert!(l2_inner(&p, &p, &g) <= l2_inner(&v, &v, &g) * (1.0 + 1e-12));
        }
    }
}
