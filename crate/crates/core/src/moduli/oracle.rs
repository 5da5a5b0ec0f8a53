use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_spd, gram, Coordinates, FieldFamily, ModuliPoint};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::solver::SolverParams;

/// Source of metric values on a coordinate patch of the moduli space.
pub trait MetricOracle: Sync {
    fn dim(&self) -> usize;
    /// Metric at coordinates `x`.
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    /// Moduli point with coordinates `x`.
    fn point(&self, x: &[f64]) -> Result<ModuliPoint>;
    /// Step for finite differences of the metric.
    fn fd_step(&self) -> f64;
}

/// `scale * I` in chart coordinates.
#[derive(Clone, Debug)]
pub struct FlatMetric {
    pub dim: usize,
    pub scale: f64,
}

impl MetricOracle for FlatMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim) * self.scale)
    }

    fn point(&self, x: &[f64]) -> Result<ModuliPoint> {
        ModuliPoint::from_real_chart(x)
    }

    fn fd_step(&self) -> f64 {
        1e-3
    }
}

/// Metric from fresh solves at every evaluation.
pub struct SolverMetric {
    pub grid: Grid2D,
    pub params: SolverParams,
    pub fd_step: f64,
    pub coordinates: Coordinates,
    pub degree: usize,
    warm: Mutex<Option<Vec<f64>>>,
}

impl SolverMetric {
    pub fn new(grid: Grid2D, params: SolverParams, fd_step: f64, coordinates: Coordinates, degree: usize) -> Self {
        Self { grid, params, fd_step, coordinates, degree, warm: Mutex::new(None) }
    }
}

impl MetricOracle for SolverMetric {
    fn dim(&self) -> usize {
        2 * self.degree
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let init = self.warm.lock().unwrap().clone();
        let mut fam = FieldFamily { grid: &self.grid, params: self.params, coordinates: self.coordinates, init };
        let (_, t) = fam.tangents(x, self.fd_step)?;
        *self.warm.lock().unwrap() = fam.init.take();
        let g = gram(&t, &self.grid);
        check_spd(&g)?;
        Ok(g)
    }

    fn point(&self, x: &[f64]) -> Result<ModuliPoint> {
        match self.coordinates {
            Coordinates::Chart => ModuliPoint::from_real_chart(x),
            Coordinates::Zeros => {
                let z: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                ModuliPoint::from_zeros(&z)
            }
        }
    }

    fn fd_step(&self) -> f64 {
        self.fd_step
    }
}

/// Two vortices with centre of mass at the origin: the slice `c_1 = 0`,
/// coordinates `(Re c_2, Im c_2)`. The slice is the fixed set of the
/// isometry `z -> -z`, hence totally geodesic, and the metric on it is the
/// `c_2` block of the full chart metric.
pub struct SlicedMetric {
    pub grid: Grid2D,
    pub params: SolverParams,
    pub fd_step: f64,
}

impl SlicedMetric {
    /// Metric and warm start at `x`, optionally starting from `init`.
    fn eval(&self, x: &[f64], init: Option<Vec<f64>>) -> Result<(DMatrix<f64>, Option<Vec<f64>>)> {
        let mut fam = FieldFamily { grid: &self.grid, params: self.params, coordinates: Coordinates::Chart, init };
        let full = [0.0, 0.0, x[0], x[1]];
        let base = fam.fields(&full)?;
        let mut t = Vec::with_capacity(2);
        for mu in 2..4 {
            let mut xp = full;
            let mut xm = full;
            xp[mu] += self.fd_step;
            xm[mu] -= self.fd_step;
            let fp = fam.fields(&xp)?;
            let fm = fam.fields(&xm)?;
            let diff = fp.axpy(-1.0, &fm).scale(0.5 / self.fd_step);
            t.push(super::gauge_fix_variation(&base, &diff, &self.grid)?);
        }
        let g = gram(&t, &self.grid);
        check_spd(&g)?;
        Ok((g, fam.init))
    }
}

impl MetricOracle for SlicedMetric {
    fn dim(&self) -> usize {
        2
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.eval(x, None)?.0)
    }

    fn point(&self, x: &[f64]) -> Result<ModuliPoint> {
        ModuliPoint::from_chart(&[Complex64::new(0.0, 0.0), Complex64::new(x[0], x[1])])
    }

    fn fd_step(&self) -> f64 {
        self.fd_step
    }
}

/// Rotationally symmetric tabulation of the `c_1 = 0` slice,
/// `g(w) = F(|w|) I` with `w = c_2`.
///
/// Rotations `z -> e^{i a} z` act on the slice as `w -> e^{2 i a} w` and the
/// metric is hermitian, so it is conformal and depends on `|w|` alone. `F`
/// is sampled along the negative real axis (zeros on the real axis) and
/// interpolated by a cubic spline with `F'(0) = 0`. Beyond the table it
/// follows the separated-vortex law `F ~ 1/|w|`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialMetric {
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    /// Largest `max(|g11 - g22|, 2|g12|) / (g11 + g22)` over the samples.
    pub anisotropy: f64,
    #[serde(skip)]
    second: Vec<f64>,
}

impl RadialMetric {
    /// Samples `F` at `count` points of `[0, rho_max]` equally spaced in
    /// `sqrt|w|` (the half-separation of the zeros).
    pub fn build(sliced: &SlicedMetric, rho_max: f64, count: usize) -> Result<Self> {
        if count < 4 || !(rho_max > 0.0) {
            return Err(Error::InvalidParameter("radial table needs rho_max > 0 and at least 4 samples".into()));
        }
        let rho: Vec<f64> = (0..count).map(|k| rho_max * (k as f64 / (count - 1) as f64).powi(2)).collect();
        let samples: Vec<Result<(f64, f64)>> = rho
            .par_iter()
            .map(|&r| {
                let (g, _) = sliced.eval(&[-r, 0.0], None)?;
                let tr = g[(0, 0)] + g[(1, 1)];
                let an = ((g[(0, 0)] - g[(1, 1)]).abs()).max(2.0 * g[(0, 1)].abs()) / tr;
                Ok((0.5 * tr, an))
            })
            .collect();
        let mut f = Vec::with_capacity(count);
        let mut anisotropy: f64 = 0.0;
        for s in samples {
            let (v, a) = s?;
            f.push(v);
            anisotropy = anisotropy.max(a);
        }
        Self::from_samples(rho, f, anisotropy)
    }

    pub fn from_samples(rho: Vec<f64>, f: Vec<f64>, anisotropy: f64) -> Result<Self> {
        if rho.len() != f.len() || rho.len() < 4 || f.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("radial table needs >= 4 positive samples".into()));
        }
        let second = spline_second_derivatives(&rho, &f);
        Ok(Self { rho, f, anisotropy, second })
    }

    pub fn rho_max(&self) -> f64 {
        *self.rho.last().unwrap()
    }

    /// `(F, F')` at `r >= 0`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let rm = self.rho_max();
        if r >= rm {
            let fm = *self.f.last().unwrap();
            return (fm * rm / r, -fm * rm / (r * r));
        }
        let k = self.rho.partition_point(|&x| x <= r).clamp(1, self.rho.len() - 1) - 1;
        let (x0, x1) = (self.rho[k], self.rho[k + 1]);
        let hh = x1 - x0;
        let a = (x1 - r) / hh;
        let b = (r - x0) / hh;
        let (m0, m1) = (self.second[k], self.second[k + 1]);
        let val = a * self.f[k] + b * self.f[k + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * hh * hh / 6.0;
        let der = (self.f[k + 1] - self.f[k]) / hh + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * hh / 6.0;
        (val, der)
    }
}

/// Cubic spline second derivatives with `f'(x_0) = 0` and a natural right end.
fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let h0 = x[1] - x[0];
    diag[0] = h0 / 3.0;
    sup[0] = h0 / 6.0;
    rhs[0] = (y[1] - y[0]) / h0;
    for i in 1..n - 1 {
        let (hl, hr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        sub[i] = hl / 6.0;
        diag[i] = (hl + hr) / 3.0;
        sup[i] = hr / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
    }
    diag[n - 1] = 1.0;
    // Thomas algorithm
    for i in 1..n {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut out = vec![0.0; n];
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
    }
    out
}

impl MetricOracle for RadialMetric {
    fn dim(&self) -> usize {
        2
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = x[0].hypot(x[1]);
        Ok(DMatrix::identity(2, 2) * self.profile(r).0)
    }

    fn point(&self, x: &[f64]) -> Result<ModuliPoint> {
        ModuliPoint::from_chart(&[Complex64::new(0.0, 0.0), Complex64::new(x[0], x[1])])
    }

    fn fd_step(&self) -> f64 {
        1e-4 * self.rho_max().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_even_quadratic_and_tail() {
        let rho: Vec<f64> = (0..11).map(|k| k as f64 * 0.5).collect();
        let f: Vec<f64> = rho.iter().map(|r| 2.0 + 0.1 * r * r).collect();
        let m = RadialMetric::from_samples(rho, f, 0.0).unwrap();
        let (v, d) = m.profile(0.0);
        assert!((v - 2.0).abs() < 1e-12 && d.abs() < 1e-12);
        for r in [0.3, 1.7, 3.2] {
            let (v, d) = m.profile(r);
            assert!((v - (2.0 + 0.1 * r * r)).abs() < 5e-3, "{r}: {v}");
            assert!((d - 0.2 * r).abs() < 2e-2);
        }
        let fm = m.profile(5.0).0;
        assert!((m.profile(10.0).0 - fm / 2.0).abs() < 1e-12);
    }
}
