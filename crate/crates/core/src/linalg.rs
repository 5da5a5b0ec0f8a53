//! Screened lattice Laplacians `(-Delta_h + w)` and their preconditioned CG solve.
//!
//! On the torus all nodes are unknowns. On the disk there are two choices:
//! [`Boundary::Dirichlet`] holds the outermost ring at zero and solves for the
//! interior nodes; [`Boundary::Natural`] solves for every node with the graph
//! Laplacian of the box (links that leave the box are absent). The
//! preconditioner inverts `-Delta_h + mean(w)` exactly: by 2D FFT on the torus,
//! by a 2D sine transform (DST-I) on the Dirichlet interior and by a 2D cosine
//! transform (DCT-II) for the natural boundary.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// `y = -Delta_h x` (5-point), zero on the disk boundary ring.
pub fn neg_laplacian(x: &[f64], grid: &Grid2D, y: &mut [f64]) {
    let n = grid.n;
    let inv = 1.0 / grid.area_element();
    if grid.is_torus() {
        for j in 0..n {
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j + 1 == n { 0 } else { j + 1 };
            for i in 0..n {
                let im = if i == 0 { n - 1 } else { i - 1 };
                let ip = if i + 1 == n { 0 } else { i + 1 };
                let c = x[j * n + i];
                y[j * n + i] = (4.0 * c - x[j * n + im] - x[j * n + ip] - x[jm * n + i] - x[jp * n + i]) * inv;
            }
        }
    } else {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = x[j * n + i];
                y[j * n + i] =
                    (4.0 * c - x[j * n + i - 1] - x[j * n + i + 1] - x[(j - 1) * n + i] - x[(j + 1) * n + i]) * inv;
            }
        }
    }
}

/// Graph Laplacian `y = -Delta_h x` of the box: every node is an unknown and
/// only links inside the box contribute. Equal to [`neg_laplacian`] on the torus.
pub fn neg_laplacian_natural(x: &[f64], grid: &Grid2D, y: &mut [f64]) {
    if grid.is_torus() {
        return neg_laplacian(x, grid, y);
    }
    let n = grid.n;
    let inv = 1.0 / grid.area_element();
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if i + 1 < n {
                let d = (x[k] - x[k + 1]) * inv;
                y[k] += d;
                y[k + 1] -= d;
            }
            if j + 1 < n {
                let d = (x[k] - x[k + n]) * inv;
                y[k] += d;
                y[k + n] -= d;
            }
        }
    }
}

/// Boundary treatment of the disk box for screened solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Ring held at zero.
    Dirichlet,
    /// All nodes unknown; graph Laplacian.
    Natural,
}

/// `Delta_h x` evaluated at every interior node, using whatever values `x`
/// holds on the disk boundary ring (inhomogeneous Dirichlet data).
pub fn laplacian_with_boundary(x: &[f64], grid: &Grid2D) -> Vec<f64> {
    let n = grid.n;
    let inv = 1.0 / grid.area_element();
    let mut y = vec![0.0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            if grid.is_boundary(i, j) {
                continue;
            }
            let (im, ip) = (grid.prev(i).unwrap(), grid.next(i).unwrap());
            let (jm, jp) = (grid.prev(j).unwrap(), grid.next(j).unwrap());
            y[j * n + i] = (x[j * n + im] + x[j * n + ip] + x[jm * n + i] + x[jp * n + i] - 4.0 * x[j * n + i]) * inv;
        }
    }
    y
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Exact inverse of `-Delta_h + shift` on the grid's unknowns.
pub struct SpectralInverse {
    grid: Grid2D,
    shift: f64,
    boundary: Boundary,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralInverse {
    pub fn new(grid: &Grid2D, shift: f64) -> Self {
        Self::with_boundary(grid, shift, Boundary::Dirichlet)
    }

    pub fn with_boundary(grid: &Grid2D, shift: f64, boundary: Boundary) -> Self {
        let mut planner = FftPlanner::new();
        let len = match (grid.is_torus(), boundary) {
            (true, _) => grid.n,
            (false, Boundary::Dirichlet) => 2 * (grid.n - 1),
            (false, Boundary::Natural) => 2 * grid.n,
        };
        Self { grid: *grid, shift, boundary, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    fn eigen(&self, k: usize, m: usize, periodic: bool) -> f64 {
        let h2 = self.grid.area_element();
        let s = if periodic {
            (std::f64::consts::PI * k as f64 / m as f64).sin()
        } else {
            (std::f64::consts::PI * k as f64 / (2.0 * (m + 1) as f64)).sin()
        };
        4.0 * s * s / h2
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        if self.grid.is_torus() {
            self.apply_periodic(r, z)
        } else if self.boundary == Boundary::Dirichlet {
            self.apply_dirichlet(r, z)
        } else {
            self.apply_natural(r, z)
        }
    }

    fn apply_periodic(&self, r: &[f64], z: &mut [f64]) {
        let n = self.grid.n;
        let mut buf: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for row in buf.chunks_mut(n) {
            self.fwd.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = buf[j * n + i];
            }
            self.fwd.process(&mut col);
            let li = self.eigen(i, n, true);
            for j in 0..n {
                let lam = li + self.eigen(j, n, true) + self.shift;
                col[j] = if lam > 0.0 { col[j] / lam } else { Complex64::new(0.0, 0.0) };
            }
            self.inv.process(&mut col);
            for j in 0..n {
                buf[j * n + i] = col[j];
            }
        }
        for row in buf.chunks_mut(n) {
            self.inv.process(row);
        }
        let scale = 1.0 / (n * n) as f64;
        for (zi, b) in z.iter_mut().zip(&buf) {
            *zi = b.re * scale;
        }
    }

    /// DST-I of length `m` via a complex FFT of length `2(m+1)`.
    fn dst(&self, x: &mut [f64], work: &mut [Complex64]) {
        let m = x.len();
        work.iter_mut().for_each(|w| *w = Complex64::new(0.0, 0.0));
        for (k, &v) in x.iter().enumerate() {
            work[k + 1] = Complex64::new(v, 0.0);
            work[2 * (m + 1) - 1 - k] = Complex64::new(-v, 0.0);
        }
        self.fwd.process(work);
        for k in 0..m {
            x[k] = -0.5 * work[k + 1].im;
        }
    }

    fn apply_dirichlet(&self, r: &[f64], z: &mut [f64]) {
        let n = self.grid.n;
        let m = n - 2;
        let mut work = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        let mut a = vec![0.0; m * m];
        for jj in 0..m {
            for ii in 0..m {
                a[jj * m + ii] = r[(jj + 1) * n + ii + 1];
            }
        }
        for row in a.chunks_mut(m) {
            self.dst(row, &mut work);
        }
        let mut col = vec![0.0; m];
        for ii in 0..m {
            for jj in 0..m {
                col[jj] = a[jj * m + ii];
            }
            self.dst(&mut col, &mut work);
            let li = self.eigen(ii + 1, m, false);
            for jj in 0..m {
                col[jj] /= li + self.eigen(jj + 1, m, false) + self.shift;
            }
            self.dst(&mut col, &mut work);
            for jj in 0..m {
                a[jj * m + ii] = col[jj];
            }
        }
        for row in a.chunks_mut(m) {
            self.dst(row, &mut work);
        }
        let scale = (2.0 / (m + 1) as f64).powi(2);
        z.iter_mut().for_each(|v| *v = 0.0);
        for jj in 0..m {
            for ii in 0..m {
                z[(jj + 1) * n + ii + 1] = a[jj * m + ii] * scale;
            }
        }
    }

    /// DCT-II `X_k = sum_i x_i cos(pi k (2i+1) / 2n)` via a padded FFT of length `2n`.
    fn dct2(&self, x: &mut [f64], work: &mut [Complex64]) {
        let n = x.len();
        work.iter_mut().for_each(|w| *w = Complex64::new(0.0, 0.0));
        for (k, &v) in x.iter().enumerate() {
            work[k] = Complex64::new(v, 0.0);
        }
        self.fwd.process(work);
        for k in 0..n {
            x[k] = (Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2 * n) as f64) * work[k]).re;
        }
    }

    /// Inverse of [`Self::dct2`].
    fn dct3(&self, x: &mut [f64], work: &mut [Complex64]) {
        let n = x.len();
        work.iter_mut().for_each(|w| *w = Complex64::new(0.0, 0.0));
        for k in 0..n {
            let c = if k == 0 { 1.0 } else { 2.0 } / n as f64;
            work[k] = Complex64::from_polar(c * x[k], std::f64::consts::PI * k as f64 / (2 * n) as f64);
        }
        self.inv.process(work);
        for i in 0..n {
            x[i] = work[i].re;
        }
    }

    fn apply_natural(&self, r: &[f64], z: &mut [f64]) {
        let n = self.grid.n;
        let h2 = self.grid.area_element();
        let lam = |k: usize| {
            let s = (std::f64::consts::PI * k as f64 / (2 * n) as f64).sin();
            4.0 * s * s / h2
        };
        let mut work = vec![Complex64::new(0.0, 0.0); 2 * n];
        z.copy_from_slice(r);
        for row in z.chunks_mut(n) {
            self.dct2(row, &mut work);
        }
        let mut col = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                col[j] = z[j * n + i];
            }
            self.dct2(&mut col, &mut work);
            for j in 0..n {
                let l = lam(i) + lam(j) + self.shift;
                col[j] = if l > 0.0 { col[j] / l } else { 0.0 };
            }
            self.dct3(&mut col, &mut work);
            for j in 0..n {
                z[j * n + i] = col[j];
            }
        }
        for row in z.chunks_mut(n) {
            self.dct3(row, &mut work);
        }
    }
}

/// Solve `(-Delta_h + w) x = rhs` by preconditioned conjugate gradients.
/// `w >= 0` pointwise and not identically zero on the torus.
pub fn solve_screened(grid: &Grid2D, w: &[f64], rhs: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    solve_screened_with(grid, w, rhs, Boundary::Dirichlet, tol, max_iters)
}

/// [`solve_screened`] with a choice of disk boundary treatment. With
/// [`Boundary::Natural`] every node is an unknown.
pub fn solve_screened_with(grid: &Grid2D, w: &[f64], rhs: &[f64], boundary: Boundary, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let len = grid.len();
    let natural = boundary == Boundary::Natural;
    let mask: Vec<bool> = (0..len).map(|k| natural || !grid.is_boundary(k % grid.n, k / grid.n)).collect();
    let count = mask.iter().filter(|&&m| m).count() as f64;
    let mean_w = w.iter().zip(&mask).filter(|(_, &m)| m).map(|(x, _)| x).sum::<f64>() / count;
    let pre = SpectralInverse::with_boundary(grid, mean_w.max(1e-12), boundary);

    let apply = |x: &[f64], y: &mut [f64]| {
        if natural {
            neg_laplacian_natural(x, grid, y);
        } else {
            neg_laplacian(x, grid, y);
        }
        for k in 0..len {
            y[k] = if mask[k] { y[k] + w[k] * x[k] } else { 0.0 };
        }
    };

    let mut b = rhs.to_vec();
    for k in 0..len {
        if !mask[k] {
            b[k] = 0.0;
        }
    }
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; len];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut z = vec![0.0; len];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];
    let mut res = 1.0;
    for _ in 0..max_iters {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res < tol {
            return Ok(x);
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::LinearSolve { iters: max_iters, residual: res })
}
