//! Lattice gauge fields: link variables `a1`, `a2` and a node scalar `phi`.
//!
//! Real convention: `D_j phi = d_j phi + i a_j phi`, gauge action
//! `a -> a + d chi`, `phi -> exp(-i chi) phi`, and `b = d_1 a_2 - d_2 a_1`. The
//! imaginary-valued connection of the physics literature is `A_j = i a_j`, so
//! `i F_12 = -b` and a vortex of positive degree carries negative `b`.
//!
//! On the lattice `a1[idx(i, j)]` lives on the link `(i, j) -> (i + 1, j)` and
//! `a2[idx(i, j)]` on `(i, j) -> (i, j + 1)`; the link variable is
//! `exp(i h a)`. Plaquette flux is the wrapped angle `wrap(h * circulation)`,
//! so gauge invariance is exact and the total flux on the torus is an integer
//! multiple of `2 pi`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Threshold on `|phi|` below which phase windings are not trusted.
pub const WINDING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub phi: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    pub chi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub field_term: f64,
    pub gradient_term: f64,
    pub potential_term: f64,
    pub total: f64,
}

/// Orientation of the first-order (Bogomolny) system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Vortex,
    AntiVortex,
}

#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..=PI).contains(&x) {
        return x;
    }
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

#[inline]
pub(crate) fn link_var(h: f64, a: f64) -> Complex64 {
    let x = h * a;
    if x.abs() < 0.5 {
        // Taylor series; the first omitted terms are below 1e-18 here
        let x2 = x * x;
        let c = 1.0
            - x2 / 2.0
                * (1.0
                    - x2 / 12.0
                        * (1.0 - x2 / 30.0 * (1.0 - x2 / 56.0 * (1.0 - x2 / 90.0 * (1.0 - x2 / 132.0 * (1.0 - x2 / 182.0))))));
        let s = x
            * (1.0
                - x2 / 6.0
                    * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0 * (1.0 - x2 / 156.0))))));
        return Complex64::new(c, s);
    }
    let (s, c) = x.sin_cos();
    Complex64::new(c, s)
}

impl FieldConfig {
    pub fn zeros(grid: &Grid2D) -> Self {
        let len = grid.len();
        Self { a1: vec![0.0; len], a2: vec![0.0; len], phi: vec![Complex64::new(0.0, 0.0); len] }
    }

    /// `phi = sqrt(tau)`, `a = 0`.
    pub fn vacuum(grid: &Grid2D, tau: f64) -> Self {
        let mut cfg = Self::zeros(grid);
        cfg.phi.fill(Complex64::new(tau.sqrt(), 0.0));
        cfg
    }

    pub fn check(&self, grid: &Grid2D) -> Result<()> {
        let len = grid.len();
        if self.a1.len() != len || self.a2.len() != len || self.phi.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "fields of length ({}, {}, {}) on a grid of {len} nodes",
                self.a1.len(),
                self.a2.len(),
                self.phi.len()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.a1.iter().chain(&self.a2).all(|x| x.is_finite())
            && self.phi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self + s * other`, componentwise.
    pub fn axpy(&self, s: f64, other: &FieldConfig) -> FieldConfig {
        FieldConfig {
            a1: self.a1.iter().zip(&other.a1).map(|(x, y)| x + s * y).collect(),
            a2: self.a2.iter().zip(&other.a2).map(|(x, y)| x + s * y).collect(),
            phi: self.phi.iter().zip(&other.phi).map(|(x, y)| x + y * s).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> FieldConfig {
        FieldConfig {
            a1: self.a1.iter().map(|x| s * x).collect(),
            a2: self.a2.iter().map(|x| s * x).collect(),
            phi: self.phi.iter().map(|z| z * s).collect(),
        }
    }

    /// Modulus of the scalar field.
    pub fn modulus(&self) -> Vec<f64> {
        self.phi.iter().map(|z| z.norm()).collect()
    }
}

impl GaugeFunction {
    pub fn new(chi: Vec<f64>) -> Self {
        Self { chi }
    }
}

/// Wrapped plaquette angle `h^2 b` for the plaquette with lower-left corner `(i, j)`.
#[inline]
pub(crate) fn plaquette_angle(a1: &[f64], a2: &[f64], grid: &Grid2D, i: usize, j: usize) -> f64 {
    let (ip, jp) = (grid.next(i).unwrap(), grid.next(j).unwrap());
    let h = grid.h;
    let circ = a1[grid.idx(i, j)] + a2[grid.idx(ip, j)] - a1[grid.idx(i, jp)] - a2[grid.idx(i, j)];
    wrap_angle(h * circ)
}

/// Magnetic field `b = d_1 a_2 - d_2 a_1` on plaquettes (index of the lower-left
/// corner). Entries for plaquettes that do not exist on the disk are zero.
pub fn curvature(a1: &[f64], a2: &[f64], grid: &Grid2D) -> Vec<f64> {
    let n = grid.n;
    let h2 = grid.area_element();
    let mut b = vec![0.0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            if grid.has_plaquette(i, j) {
                b[grid.idx(i, j)] = plaquette_angle(a1, a2, grid, i, j) / h2;
            }
        }
    }
    b
}

/// Link covariant differences `(exp(i h a) phi(y) - phi(x)) / h`, second-order
/// accurate at the link midpoints. Missing links on the disk give zero.
pub fn covariant_derivative(
    a1: &[f64],
    a2: &[f64],
    phi: &[Complex64],
    grid: &Grid2D,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let h = grid.h;
    let mut d1 = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut d2 = d1.clone();
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            if let Some(ip) = grid.next(i) {
                d1[k] = (link_var(h, a1[k]) * phi[grid.idx(ip, j)] - phi[k]) / h;
            }
            if let Some(jp) = grid.next(j) {
                d2[k] = (link_var(h, a2[k]) * phi[grid.idx(i, jp)] - phi[k]) / h;
            }
        }
    }
    (d1, d2)
}

/// Weight of the nearest-neighbour terms in the improved lattice action.
pub const NEAR_WEIGHT: f64 = 4.0 / 3.0;
/// Weight of the doubled-stencil terms (`2h` links, `2h x 2h` plaquettes).
pub const FAR_WEIGHT: f64 = -1.0 / 3.0;

/// Wrapped angle of the `2h x 2h` plaquette with lower-left corner `(i, j)`,
/// or `None` where it does not fit on the disk.
#[inline]
pub(crate) fn double_plaquette_angle(a1: &[f64], a2: &[f64], grid: &Grid2D, i: usize, j: usize) -> Option<f64> {
    let i1 = grid.next(i)?;
    let i2 = grid.next(i1)?;
    let j1 = grid.next(j)?;
    let j2 = grid.next(j1)?;
    let circ = a1[grid.idx(i, j)] + a1[grid.idx(i1, j)] + a2[grid.idx(i2, j)] + a2[grid.idx(i2, j1)]
        - a1[grid.idx(i, j2)]
        - a1[grid.idx(i1, j2)]
        - a2[grid.idx(i, j)]
        - a2[grid.idx(i, j1)];
    Some(wrap_angle(grid.h * circ))
}

/// `U_tau = 1/2 sum { b^2 + |D phi|^2 + 1/4 (tau - |phi|^2)^2 } h^2`.
///
/// The field and gradient terms use the improved action
/// `4/3 S_h - 1/3 S_2h`, where `S_2h` is built from `2h` links
/// `exp(i h (a(x) + a(x + h)))` and `2h x 2h` plaquettes. The `O(h^2)`
/// truncation errors of the two stencils cancel, so the energy of a smooth
/// configuration is accurate to `O(h^4)`. This matters for slow vortex
/// motion: the `O(h^2)` energy carries a spurious separation-dependent
/// potential between vortices.
pub fn potential_energy(cfg: &FieldConfig, tau: f64, grid: &Grid2D) -> EnergyBreakdown {
    let n = grid.n;
    let h = grid.h;
    let h2 = grid.area_element();
    let (mut f1, mut f2, mut g1, mut g2, mut potential) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            let phi = cfg.phi[k];
            if grid.has_plaquette(i, j) {
                let t = plaquette_angle(&cfg.a1, &cfg.a2, grid, i, j);
                f1 += t * t;
            }
            if let Some(t) = double_plaquette_angle(&cfg.a1, &cfg.a2, grid, i, j) {
                f2 += t * t;
            }
            if let Some(ip) = grid.next(i) {
                let u = link_var(h, cfg.a1[k]);
                g1 += (u * cfg.phi[grid.idx(ip, j)] - phi).norm_sqr();
                if let Some(ipp) = grid.next(ip) {
                    let v = u * link_var(h, cfg.a1[grid.idx(ip, j)]);
                    g2 += (v * cfg.phi[grid.idx(ipp, j)] - phi).norm_sqr();
                }
            }
            if let Some(jp) = grid.next(j) {
                let u = link_var(h, cfg.a2[k]);
                g1 += (u * cfg.phi[grid.idx(i, jp)] - phi).norm_sqr();
                if let Some(jpp) = grid.next(jp) {
                    let v = u * link_var(h, cfg.a2[grid.idx(i, jp)]);
                    g2 += (v * cfg.phi[grid.idx(i, jpp)] - phi).norm_sqr();
                }
            }
            let w = tau - phi.norm_sqr();
            potential += w * w;
        }
    }
    let field_term = 0.5 * (NEAR_WEIGHT * f1 + FAR_WEIGHT * f2 / 16.0) / h2;
    let gradient_term = 0.5 * (NEAR_WEIGHT * g1 + FAR_WEIGHT * g2 / 4.0);
    let potential_term = 0.125 * potential * h2;
    EnergyBreakdown { field_term, gradient_term, potential_term, total: field_term + gradient_term + potential_term }
}

/// `T = 1/2 sum (a1dot^2 + a2dot^2 + |phidot|^2) h^2` over existing links and nodes.
pub fn kinetic_energy(a1dot: &[f64], a2dot: &[f64], phidot: &[Complex64], grid: &Grid2D) -> f64 {
    let n = grid.n;
    let mut total = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for i in 0..n {
            let k = grid.idx(i, j);
            if grid.has_link(i, j, 0) {
                row += a1dot[k] * a1dot[k];
            }
            if grid.has_link(i, j, 1) {
                row += a2dot[k] * a2dot[k];
            }
            row += phidot[k].norm_sqr();
        }
        total += row;
    }
    0.5 * total * grid.area_element()
}

/// Corner values of plaquette `(i, j)` parallel-transported into the frame of
/// its lower-left node: `[phi00, phi10, phi01, phi11 via (1,0), phi11 via (0,1)]`.
pub(crate) fn transported_corners(cfg: &FieldConfig, grid: &Grid2D, i: usize, j: usize) -> [Complex64; 5] {
    let h = grid.h;
    let (ip, jp) = (grid.next(i).unwrap(), grid.next(j).unwrap());
    let u1 = link_var(h, cfg.a1[grid.idx(i, j)]);
    let u2 = link_var(h, cfg.a2[grid.idx(i, j)]);
    let u2r = link_var(h, cfg.a2[grid.idx(ip, j)]);
    let u1t = link_var(h, cfg.a1[grid.idx(i, jp)]);
    let far = cfg.phi[grid.idx(ip, jp)];
    [cfg.phi[grid.idx(i, j)], u1 * cfg.phi[grid.idx(ip, j)], u2 * cfg.phi[grid.idx(i, jp)], u1 * u2r * far, u2 * u1t * far]
}

/// Covariant derivatives at the centre of plaquette `(i, j)` (frame of the
/// lower-left node), each the mean of the two parallel link differences, and
/// the mean of `|phi|^2` over the corners.
pub(crate) fn plaquette_derivatives(cfg: &FieldConfig, grid: &Grid2D, i: usize, j: usize) -> (Complex64, Complex64, f64) {
    let [p00, p10, p01, p11a, p11b] = transported_corners(cfg, grid, i, j);
    let h = grid.h;
    let d1 = (p10 - p00 + p11b - p01) / (2.0 * h);
    let d2 = (p01 - p00 + p11a - p10) / (2.0 * h);
    let m2 = 0.25 * (p00.norm_sqr() + p10.norm_sqr() + p01.norm_sqr() + p11a.norm_sqr());
    (d1, d2, m2)
}

/// Gauge-invariant phase winding of `phi` around every plaquette.
pub fn plaquette_windings(cfg: &FieldConfig, grid: &Grid2D) -> Vec<i32> {
    let n = grid.n;
    let h = grid.h;
    let mut w = vec![0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            if !grid.has_plaquette(i, j) {
                continue;
            }
            let (ip, jp) = (grid.next(i).unwrap(), grid.next(j).unwrap());
            let p = |ii: usize, jj: usize| cfg.phi[grid.idx(ii, jj)];
            let hop = |x: Complex64, a: f64, y: Complex64| (x.conj() * link_var(h, a) * y).arg();
            let s = hop(p(i, j), cfg.a1[grid.idx(i, j)], p(ip, j)) + hop(p(ip, j), cfg.a2[grid.idx(ip, j)], p(ip, jp))
                - hop(p(i, jp), cfg.a1[grid.idx(i, jp)], p(ip, jp))
                - hop(p(i, j), cfg.a2[grid.idx(i, j)], p(i, jp));
            let t = plaquette_angle(&cfg.a1, &cfg.a2, grid, i, j);
            w[grid.idx(i, j)] = ((s - t) / TAU).round() as i32;
        }
    }
    w
}

/// Total flux `-(1/2pi) sum b h^2`, the degree of the configuration.
pub fn flux_quanta(cfg: &FieldConfig, grid: &Grid2D) -> f64 {
    let mut s = 0.0;
    for j in 0..grid.n {
        for i in 0..grid.n {
            if grid.has_plaquette(i, j) {
                s += plaquette_angle(&cfg.a1, &cfg.a2, grid, i, j);
            }
        }
    }
    -s / TAU
}

/// Vortex number. Torus: the integer flux. Disk: the covariant winding of
/// `phi` summed over all plaquettes, which equals the winding along the
/// outermost ring; requires `|phi| >= 0.1` there.
pub fn vortex_number(cfg: &FieldConfig, grid: &Grid2D) -> Result<i64> {
    cfg.check(grid)?;
    if grid.is_torus() {
        return Ok(flux_quanta(cfg, grid).round() as i64);
    }
    let n = grid.n;
    let mut min_modulus = f64::INFINITY;
    for j in 0..n {
        for i in 0..n {
            if grid.is_boundary(i, j) {
                min_modulus = min_modulus.min(cfg.phi[grid.idx(i, j)].norm());
            }
        }
    }
    if min_modulus < WINDING_THRESHOLD {
        return Err(Error::IllDefinedVortexNumber { min_modulus });
    }
    Ok(plaquette_windings(cfg, grid).iter().map(|&w| w as i64).sum())
}

/// `a_j -> a_j + d_j chi` (lattice forward difference), `phi -> exp(-i chi) phi`.
pub fn gauge_transform(cfg: &FieldConfig, chi: &GaugeFunction, grid: &Grid2D) -> FieldConfig {
    let n = grid.n;
    let h = grid.h;
    let c = &chi.chi;
    let mut out = cfg.clone();
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            if let Some(ip) = grid.next(i) {
                out.a1[k] += (c[grid.idx(ip, j)] - c[k]) / h;
            }
            if let Some(jp) = grid.next(j) {
                out.a2[k] += (c[grid.idx(i, jp)] - c[k]) / h;
            }
            out.phi[k] = cfg.phi[k] * Complex64::from_polar(1.0, -c[k]);
        }
    }
    out
}

/// `(a, phi) -> (-a, conj phi)`: maps vortices of degree `d` to anti-vortices
/// of degree `-d`.
pub fn conjugate_to_antivortex(cfg: &FieldConfig) -> FieldConfig {
    FieldConfig {
        a1: cfg.a1.iter().map(|x| -x).collect(),
        a2: cfg.a2.iter().map(|x| -x).collect(),
        phi: cfg.phi.iter().map(|z| z.conj()).collect(),
    }
}

/// L2 residuals `(r1, r2)` of the first-order system on plaquette centres.
///
/// Vortex: `r1 = |(D_1 + i D_2) phi|`, `r2 = |-b - (tau - |phi|^2)/2|`.
/// Anti-vortex: `r1 = |(D_1 - i D_2) phi|`, `r2 = |-b + (tau - |phi|^2)/2|`.
/// Both vanish on the vacuum and are O(h^2) on reconstructed solutions. On
/// the disk, plaquettes touching the Dirichlet ring are excluded.
pub fn bogomolny_residuals(cfg: &FieldConfig, tau: f64, grid: &Grid2D, orientation: Orientation) -> (f64, f64) {
    let n = grid.n;
    let h2 = grid.area_element();
    let sign = match orientation {
        Orientation::Vortex => 1.0,
        Orientation::AntiVortex => -1.0,
    };
    let i_unit = Complex64::new(0.0, sign);
    let (mut s1, mut s2) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let touches_ring = !grid.is_torus() && (i == 0 || j == 0 || i + 2 >= n || j + 2 >= n);
            if !grid.has_plaquette(i, j) || touches_ring {
                continue;
            }
            let (d1, d2, m2) = plaquette_derivatives(cfg, grid, i, j);
            s1 += (d1 + i_unit * d2).norm_sqr();
            let b = plaquette_angle(&cfg.a1, &cfg.a2, grid, i, j) / h2;
            let r = -b - sign * 0.5 * (tau - m2);
            s2 += r * r;
        }
    }
    ((s1 * h2).sqrt(), (s2 * h2).sqrt())
}
