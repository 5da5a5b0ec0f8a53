//! Hyperbolic Ginzburg–Landau evolution in temporal gauge.
//!
//! The equations of motion are the Euler–Lagrange equations of the lattice
//! Lagrangian `L = T - U_tau` (see [`crate::field::potential_energy`]):
//!
//! ```text
//! a1'' ~ -d_2 b - Im(conj(phi) D_1 phi)
//! a2'' ~ +d_1 b - Im(conj(phi) D_2 phi)
//! phi'' ~ D_j D_j phi + (tau - |phi|^2) phi / 2
//! ```
//!
//! with every term the exact gradient of the improved lattice energy, so the
//! stencils mix nearest-neighbour and doubled links and plaquettes.
//!
//! and the Gauss constraint is `div_h a' + Im(conj(phi) phi') = 0` at every
//! node (backward divergence). Kick-drift-kick leapfrog preserves the lattice
//! Gauss constraint exactly, up to rounding.
//!
//! On the disk the boundary ring is clamped: ring nodes and links joining two
//! ring nodes keep their initial values and carry zero velocity.

mod adiabatic;
mod zeros;

pub use adiabatic::{adiabatic_compare, AdiabaticParams, AdiabaticSample, ComparisonReport};
pub use zeros::{track_zeros, TrackedZero};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{kinetic_energy, link_var, potential_energy, wrap_angle, FieldConfig, FAR_WEIGHT, NEAR_WEIGHT};
use crate::grid::Grid2D;

/// Largest admissible `dt / h`.
pub const CFL_LIMIT: f64 = 0.5;

/// Sign multiplying the current `Im(conj(phi) D_j phi)` in the gauge-field
/// acceleration, fixed by energy conservation.
pub const CURRENT_SIGN: f64 = -1.0;

/// Relative energy jump that aborts an evolution.
pub const BLOW_UP_JUMP: f64 = 0.1;

/// Phase-space point `(a, phi, a', phi')` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicState {
    pub cfg: FieldConfig,
    pub a1dot: Vec<f64>,
    pub a2dot: Vec<f64>,
    pub phidot: Vec<Complex64>,
    pub t: f64,
    /// Gauss residual when the state was built.
    pub initial_gauss: f64,
}

impl DynamicState {
    /// Builds a state; clamped disk entries of the velocity are zeroed.
    pub fn new(grid: &Grid2D, cfg: FieldConfig, velocity: FieldConfig, t: f64) -> Result<Self> {
        cfg.check(grid)?;
        velocity.check(grid)?;
        if !cfg.is_finite() || !velocity.is_finite() {
            return Err(Error::InvalidParameter("non-finite initial data".into()));
        }
        let mask = Mask::new(grid);
        let FieldConfig { mut a1, mut a2, mut phi } = velocity;
        mask.apply(&mut a1, &mut a2, &mut phi);
        let mut state = Self { cfg, a1dot: a1, a2dot: a2, phidot: phi, t, initial_gauss: 0.0 };
        state.initial_gauss = gauss_residual(&state, grid);
        Ok(state)
    }

    pub fn at_rest(grid: &Grid2D, cfg: FieldConfig) -> Result<Self> {
        let v = FieldConfig { a1: vec![0.0; grid.len()], a2: vec![0.0; grid.len()], phi: vec![Complex64::new(0.0, 0.0); grid.len()] };
        Self::new(grid, cfg, v, 0.0)
    }

    pub fn velocity(&self) -> FieldConfig {
        FieldConfig { a1: self.a1dot.clone(), a2: self.a2dot.clone(), phi: self.phidot.clone() }
    }

    pub fn kinetic(&self, grid: &Grid2D) -> f64 {
        kinetic_energy(&self.a1dot, &self.a2dot, &self.phidot, grid)
    }

    /// `(T, U, T + U)`.
    pub fn energies(&self, grid: &Grid2D, tau: f64) -> (f64, f64, f64) {
        let t = self.kinetic(grid);
        let u = potential_energy(&self.cfg, tau, grid).total;
        (t, u, t + u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionParams {
    pub dt: f64,
    pub n_steps: usize,
    /// Keep every `sample_every`-th state (the initial and final states are
    /// always kept).
    pub sample_every: usize,
    /// Energy is checked for blow-up every this many steps.
    pub check_every: usize,
    pub tau: f64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self { dt: 0.02, n_steps: 1000, sample_every: 100, check_every: 50, tau: 1.0 }
    }
}

impl EvolutionParams {
    pub fn cfl(&self, grid: &Grid2D) -> f64 {
        self.dt / grid.h
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.sample_every == 0 || self.check_every == 0 {
            return Err(Error::InvalidParameter("sample_every and check_every must be >= 1".into()));
        }
        let ratio = self.cfl(grid);
        if ratio > CFL_LIMIT {
            return Err(Error::CflViolation { ratio, limit: CFL_LIMIT });
        }
        Ok(())
    }
}

/// Which entries evolve. On the torus everything does.
struct Mask {
    a1: Vec<bool>,
    a2: Vec<bool>,
    node: Vec<bool>,
    all: bool,
}

impl Mask {
    fn new(grid: &Grid2D) -> Self {
        let n = grid.n;
        let len = grid.len();
        let (mut a1, mut a2, mut node) = (vec![true; len], vec![true; len], vec![true; len]);
        if !grid.is_torus() {
            for j in 0..n {
                for i in 0..n {
                    let k = grid.idx(i, j);
                    node[k] = !grid.is_boundary(i, j);
                    a1[k] = i + 1 < n && !(grid.is_boundary(i, j) && grid.is_boundary(i + 1, j));
                    a2[k] = j + 1 < n && !(grid.is_boundary(i, j) && grid.is_boundary(i, j + 1));
                }
            }
        }
        Self { a1, a2, node, all: grid.is_torus() }
    }

    fn apply(&self, a1: &mut [f64], a2: &mut [f64], phi: &mut [Complex64]) {
        if self.all {
            return;
        }
        for k in 0..a1.len() {
            if !self.a1[k] {
                a1[k] = 0.0;
            }
            if !self.a2[k] {
                a2[k] = 0.0;
            }
            if !self.node[k] {
                phi[k] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Scratch space for [`accelerations_into`].
struct Workspace {
    u1: Vec<Complex64>,
    u2: Vec<Complex64>,
    next: Vec<usize>,
}

impl Workspace {
    fn new(grid: &Grid2D) -> Self {
        let next = (0..grid.n).map(|i| grid.next(i).unwrap_or(usize::MAX)).collect();
        Self { u1: vec![Complex64::new(1.0, 0.0); grid.len()], u2: vec![Complex64::new(1.0, 0.0); grid.len()], next }
    }
}

fn accelerations_into(cfg: &FieldConfig, grid: &Grid2D, tau: f64, sign: f64, mask: &Mask, ws: &mut Workspace, out: &mut FieldConfig) {
    let n = grid.n;
    let h = grid.h;
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    let inv_h3 = inv_h2 * inv_h;
    for k in 0..grid.len() {
        ws.u1[k] = link_var(h, cfg.a1[k]);
        ws.u2[k] = link_var(h, cfg.a2[k]);
        let phi = cfg.phi[k];
        out.phi[k] = phi * (0.5 * (tau - phi.norm_sqr()));
        out.a1[k] = 0.0;
        out.a2[k] = 0.0;
    }
    let (a1, a2, phi) = (&cfg.a1, &cfg.a2, &cfg.phi);
    let (w1, w2) = (NEAR_WEIGHT, 0.25 * FAR_WEIGHT);
    let wp2 = FAR_WEIGHT / 16.0;
    let none = usize::MAX;
    for j in 0..n {
        let jp = ws.next[j];
        let jpp = if jp == none { none } else { ws.next[jp] };
        for i in 0..n {
            let ip = ws.next[i];
            let ipp = if ip == none { none } else { ws.next[ip] };
            let k = j * n + i;
            let px = phi[k];
            if ip != none {
                let ky = j * n + ip;
                let t = ws.u1[k] * phi[ky];
                out.a1[k] += w1 * sign * (px.conj() * t).im * inv_h;
                out.phi[k] += (t - px) * (w1 * inv_h2);
                out.phi[ky] += (ws.u1[k].conj() * px - phi[ky]) * (w1 * inv_h2);
                if ipp != none {
                    let kz = j * n + ipp;
                    let v = ws.u1[k] * ws.u1[ky];
                    let t = v * phi[kz];
                    let c = w2 * sign * (px.conj() * t).im * inv_h;
                    out.a1[k] += c;
                    out.a1[ky] += c;
                    out.phi[k] += (t - px) * (w2 * inv_h2);
                    out.phi[kz] += (v.conj() * px - phi[kz]) * (w2 * inv_h2);
                }
            }
            if jp != none {
                let ky = jp * n + i;
                let t = ws.u2[k] * phi[ky];
                out.a2[k] += w1 * sign * (px.conj() * t).im * inv_h;
                out.phi[k] += (t - px) * (w1 * inv_h2);
                out.phi[ky] += (ws.u2[k].conj() * px - phi[ky]) * (w1 * inv_h2);
                if jpp != none {
                    let kz = jpp * n + i;
                    let v = ws.u2[k] * ws.u2[ky];
                    let t = v * phi[kz];
                    let c = w2 * sign * (px.conj() * t).im * inv_h;
                    out.a2[k] += c;
                    out.a2[ky] += c;
                    out.phi[k] += (t - px) * (w2 * inv_h2);
                    out.phi[kz] += (v.conj() * px - phi[kz]) * (w2 * inv_h2);
                }
                if ip != none {
                    let b = w1 * wrap_angle(h * (a1[k] + a2[j * n + ip] - a1[jp * n + i] - a2[k])) * inv_h3;
                    out.a1[k] -= b;
                    out.a2[j * n + ip] -= b;
                    out.a1[jp * n + i] += b;
                    out.a2[k] += b;
                }
                if ipp != none && jpp != none {
                    let bottom = [k, j * n + ip];
                    let right = [j * n + ipp, jp * n + ipp];
                    let top = [jpp * n + i, jpp * n + ip];
                    let left = [k, jp * n + i];
                    let circ = a1[bottom[0]] + a1[bottom[1]] + a2[right[0]] + a2[right[1]]
                        - a1[top[0]]
                        - a1[top[1]]
                        - a2[left[0]]
                        - a2[left[1]];
                    let b = wp2 * wrap_angle(h * circ) * inv_h3;
                    for m in 0..2 {
                        out.a1[bottom[m]] -= b;
                        out.a2[right[m]] -= b;
                        out.a1[top[m]] += b;
                        out.a2[left[m]] += b;
                    }
                }
            }
        }
    }
    mask.apply(&mut out.a1, &mut out.a2, &mut out.phi);
}

/// Accelerations `(a1'', a2'', phi'')` of a configuration, returned in
/// [`FieldConfig`] layout. Clamped disk entries are zero.
pub fn accelerations(cfg: &FieldConfig, grid: &Grid2D, tau: f64) -> FieldConfig {
    accelerations_with_current_sign(cfg, grid, tau, CURRENT_SIGN)
}

/// [`accelerations`] with the sign of the current term in the gauge-field
/// equation as a parameter. Only the default sign conserves energy.
#[doc(hidden)]
pub fn accelerations_with_current_sign(cfg: &FieldConfig, grid: &Grid2D, tau: f64, sign: f64) -> FieldConfig {
    let mut out = FieldConfig::zeros(grid);
    accelerations_into(cfg, grid, tau, sign, &Mask::new(grid), &mut Workspace::new(grid), &mut out);
    out
}

/// Velocity of a rigid translation with velocity `v`, gauge-fixed so that it
/// satisfies the Gauss constraint: the projection of
/// `(a1', a2', phi') = (v_2 b, -v_1 b, -v_k D_k phi)`. `b` is averaged from the
/// two plaquettes beside each link and `D_k phi` from the two links at each node.
pub fn translation_velocity(cfg: &FieldConfig, grid: &Grid2D, v: [f64; 2]) -> Result<FieldConfig> {
    cfg.check(grid)?;
    let n = grid.n;
    let h = grid.h;
    let b = crate::field::curvature(&cfg.a1, &cfg.a2, grid);
    let plaq = |i: Option<usize>, j: Option<usize>| match (i, j) {
        (Some(i), Some(j)) if grid.has_plaquette(i, j) => b[grid.idx(i, j)],
        _ => 0.0,
    };
    let mut out = FieldConfig::zeros(grid);
    for j in 0..n {
        for i in 0..n {
            let k = grid.idx(i, j);
            if grid.has_link(i, j, 0) {
                out.a1[k] = v[1] * 0.5 * (plaq(Some(i), Some(j)) + plaq(Some(i), grid.prev(j)));
            }
            if grid.has_link(i, j, 1) {
                out.a2[k] = -v[0] * 0.5 * (plaq(Some(i), Some(j)) + plaq(grid.prev(i), Some(j)));
            }
            let p = cfg.phi[k];
            let mut dphi = Complex64::new(0.0, 0.0);
            for (axis, a) in [(0usize, &cfg.a1), (1, &cfg.a2)] {
                let fwd = if axis == 0 { grid.next(i).map(|ip| grid.idx(ip, j)) } else { grid.next(j).map(|jp| grid.idx(i, jp)) };
                let bwd = if axis == 0 { grid.prev(i).map(|im| grid.idx(im, j)) } else { grid.prev(j).map(|jm| grid.idx(i, jm)) };
                let (mut sum, mut count) = (Complex64::new(0.0, 0.0), 0.0);
                if let Some(ky) = fwd {
                    sum += (link_var(h, a[k]) * cfg.phi[ky] - p) / h;
                    count += 1.0;
                }
                if let Some(km) = bwd {
                    sum += (p - link_var(h, a[km]).conj() * cfg.phi[km]) / h;
                    count += 1.0;
                }
                if count > 0.0 {
                    dphi -= sum * (v[axis] / count);
                }
            }
            out.phi[k] = dphi;
        }
    }
    crate::moduli::gauge_fix_variation(cfg, &out, grid)
}

/// L2 norm of `div_h a' + Im(conj(phi) phi')` over the non-clamped nodes.
pub fn gauss_residual(state: &DynamicState, grid: &Grid2D) -> f64 {
    let n = grid.n;
    let inv_h = 1.0 / grid.h;
    let mut total = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for i in 0..n {
            if grid.is_boundary(i, j) {
                continue;
            }
            let k = grid.idx(i, j);
            let (im, jm) = (grid.prev(i).unwrap(), grid.prev(j).unwrap());
            let div = (state.a1dot[k] - state.a1dot[grid.idx(im, j)] + state.a2dot[k] - state.a2dot[grid.idx(i, jm)]) * inv_h;
            let g = div + (state.cfg.phi[k].conj() * state.phidot[k]).im;
            row += g * g;
        }
        total += row;
    }
    (total * grid.area_element()).sqrt()
}

/// What the observer sees after each step.
pub struct StepInfo<'a> {
    pub step: usize,
    pub state: &'a DynamicState,
}

/// Kick-drift-kick leapfrog with a per-step observer. The observer may stop
/// the run early by returning `false`. Returns the final state.
pub fn leapfrog_evolve_with<F>(state0: &DynamicState, grid: &Grid2D, params: &EvolutionParams, sign: f64, mut observer: F) -> Result<DynamicState>
where
    F: FnMut(StepInfo<'_>) -> bool,
{
    params.validate(grid)?;
    state0.cfg.check(grid)?;
    let g0 = gauss_residual(state0, grid);
    if g0 > 1e-8 {
        return Err(Error::GaussViolation { residual: g0 });
    }
    let mask = Mask::new(grid);
    let dt = params.dt;
    let half = 0.5 * dt;
    let tau = params.tau;
    let e0 = state0.energies(grid, tau).2;
    let mut s = state0.clone();
    let mut acc = FieldConfig::zeros(grid);
    let mut ws = Workspace::new(grid);
    accelerations_into(&s.cfg, grid, tau, sign, &mask, &mut ws, &mut acc);
    let t0 = s.t;
    for step in 1..=params.n_steps {
        kick(&mut s, &acc, half);
        for k in 0..grid.len() {
            s.cfg.a1[k] += dt * s.a1dot[k];
            s.cfg.a2[k] += dt * s.a2dot[k];
            s.cfg.phi[k] += s.phidot[k] * dt;
        }
        accelerations_into(&s.cfg, grid, tau, sign, &mask, &mut ws, &mut acc);
        kick(&mut s, &acc, half);
        s.t = t0 + step as f64 * dt;
        if step % params.check_every == 0 {
            let e = s.energies(grid, tau).2;
            if !e.is_finite() || (e - e0).abs() > BLOW_UP_JUMP * e0.abs() {
                return Err(Error::BlowUp { t: s.t, energy: e, initial: e0 });
            }
        }
        if !observer(StepInfo { step, state: &s }) {
            break;
        }
    }
    Ok(s)
}

fn kick(s: &mut DynamicState, acc: &FieldConfig, c: f64) {
    for k in 0..s.a1dot.len() {
        s.a1dot[k] += c * acc.a1[k];
        s.a2dot[k] += c * acc.a2[k];
        s.phidot[k] += acc.phi[k] * c;
    }
}

/// Evolve and return the sampled states: the initial state, every
/// `sample_every`-th step, and the final state.
pub fn leapfrog_evolve(state0: &DynamicState, grid: &Grid2D, params: &EvolutionParams) -> Result<Vec<DynamicState>> {
    let mut out = vec![state0.clone()];
    let last = leapfrog_evolve_with(state0, grid, params, CURRENT_SIGN, |info| {
        if info.step % params.sample_every == 0 {
            out.push(info.state.clone());
        }
        true
    })?;
    if params.n_steps % params.sample_every != 0 {
        out.push(last);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaugeFunction;

    fn smooth_cfg(grid: &Grid2D) -> FieldConfig {
        let mut cfg = FieldConfig::zeros(grid);
        let l = grid.side();
        let w = std::f64::consts::TAU / l;
        for j in 0..grid.n {
            for i in 0..grid.n {
                let (x, y) = (grid.coord(i), grid.coord(j));
                let k = grid.idx(i, j);
                cfg.a1[k] = 0.3 * (w * y).sin() + 0.1 * (w * x).cos();
                cfg.a2[k] = -0.2 * (w * x).cos() * (w * y).sin();
                cfg.phi[k] = Complex64::new(1.0 + 0.2 * (w * x).sin(), 0.3 * (w * (x - y)).cos());
            }
        }
        cfg
    }

    /// Central difference of the energy against the analytic force.
    #[test]
    fn accelerations_are_minus_energy_gradient() {
        let g = Grid2D::torus(8.0, 16).unwrap();
        let cfg = smooth_cfg(&g);
        let acc = accelerations(&cfg, &g, 1.3);
        let h2 = g.area_element();
        let u = |c: &FieldConfig| potential_energy(c, 1.3, &g).total;
        let eps = 1e-5;
        for &k in &[0usize, 17, 100, 255] {
            let mut p = cfg.clone();
            let mut m = cfg.clone();
            p.a1[k] += eps;
            m.a1[k] -= eps;
            let f = -(u(&p) - u(&m)) / (2.0 * eps) / h2;
            assert!((f - acc.a1[k]).abs() < 1e-6 * (1.0 + f.abs()), "a1 {k}: {f} vs {}", acc.a1[k]);
            let mut p = cfg.clone();
            let mut m = cfg.clone();
            p.a2[k] += eps;
            m.a2[k] -= eps;
            let f = -(u(&p) - u(&m)) / (2.0 * eps) / h2;
            assert!((f - acc.a2[k]).abs() < 1e-6 * (1.0 + f.abs()));
            let mut p = cfg.clone();
            let mut m = cfg.clone();
            p.phi[k].im += eps;
            m.phi[k].im -= eps;
            let f = -(u(&p) - u(&m)) / (2.0 * eps) / h2;
            assert!((f - acc.phi[k].im).abs() < 1e-6 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn vacuum_is_bit_stable() {
        let g = Grid2D::torus(8.0, 16).unwrap();
        let s = DynamicState::at_rest(&g, FieldConfig::vacuum(&g, 1.0)).unwrap();
        let p = EvolutionParams { dt: 0.2, n_steps: 50, ..Default::default() };
        let out = leapfrog_evolve(&s, &g, &p).unwrap();
        assert_eq!(out.last().unwrap().cfg, s.cfg);
    }

    #[test]
    fn cfl_and_gauss_preconditions() {
        let g = Grid2D::torus(8.0, 16).unwrap();
        let s = DynamicState::at_rest(&g, FieldConfig::vacuum(&g, 1.0)).unwrap();
        let p = EvolutionParams { dt: 0.3, ..Default::default() };
        assert!(matches!(leapfrog_evolve(&s, &g, &p), Err(Error::CflViolation { .. })));
        // pure gauge velocity with a non-harmonic chi violates the constraint
        let chi: Vec<f64> = (0..g.len()).map(|k| ((k % 16) as f64 * 0.4).sin()).collect();
        let pure = gauge_direction(&s.cfg, &chi, &g);
        let s = DynamicState::new(&g, s.cfg.clone(), pure, 0.0).unwrap();
        assert!(s.initial_gauss > 1e-2);
        let p = EvolutionParams { dt: 0.2, ..Default::default() };
        assert!(matches!(leapfrog_evolve(&s, &g, &p), Err(Error::GaussViolation { .. })));
    }

    fn gauge_direction(cfg: &FieldConfig, chi: &[f64], g: &Grid2D) -> FieldConfig {
        let eps = 1e-7;
        let moved = crate::field::gauge_transform(cfg, &GaugeFunction::new(chi.iter().map(|c| c * eps).collect()), g);
        moved.axpy(-1.0, cfg).scale(1.0 / eps)
    }

    #[test]
    fn gauss_law_is_preserved_and_energy_conserved() {
        let g = Grid2D::torus(8.0, 32).unwrap();
        let cfg = smooth_cfg(&g);
        // velocity phi' = f phi with f real satisfies the constraint
        let vel = FieldConfig {
            a1: vec![0.0; g.len()],
            a2: vec![0.0; g.len()],
            phi: cfg.phi.iter().enumerate().map(|(k, z)| z * (0.1 * (0.4 * (k % 32) as f64).sin())).collect(),
        };
        let s = DynamicState::new(&g, cfg, vel, 0.0).unwrap();
        assert!(s.initial_gauss < 1e-12);
        let p = EvolutionParams { dt: 0.05, n_steps: 400, sample_every: 100, ..Default::default() };
        let out = leapfrog_evolve(&s, &g, &p).unwrap();
        let e0 = s.energies(&g, 1.0).2;
        for st in &out {
            assert!(gauss_residual(st, &g) < 1e-10);
            let e = st.energies(&g, 1.0).2;
            assert!((e - e0).abs() < 1e-3 * e0, "{e} vs {e0}");
        }
    }

    #[test]
    fn wrong_current_sign_breaks_energy_conservation() {
        let g = Grid2D::torus(8.0, 32).unwrap();
        let s = DynamicState::at_rest(&g, smooth_cfg(&g)).unwrap();
        let p = EvolutionParams { dt: 0.05, n_steps: 100, check_every: 1_000_000, ..Default::default() };
        let drift = |sign: f64| {
            let e0 = s.energies(&g, 1.0).2;
            let last = leapfrog_evolve_with(&s, &g, &p, sign, |_| true).unwrap();
            ((last.energies(&g, 1.0).2 - e0) / e0).abs()
        };
        assert!(drift(CURRENT_SIGN) < 1e-3);
        assert!(drift(-CURRENT_SIGN) > 1e-2);
    }
}
