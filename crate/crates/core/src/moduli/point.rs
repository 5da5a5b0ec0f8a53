use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{eval_monic, monic_from_roots};

/// A point of `Sym^d C`: an unordered multiset of zeros together with the
/// monic chart `prod (z - z_j) = z^d + c_1 z^{d-1} + ... + c_d`.
///
/// Zeros are kept in a canonical order (lexicographic in real, then
/// imaginary part) so equal multisets compare equal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuliPoint {
    zeros: Vec<Complex64>,
    chart: Vec<Complex64>,
}

fn canonical(mut z: Vec<Complex64>) -> Vec<Complex64> {
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}

impl ModuliPoint {
    pub fn from_zeros(zeros: &[Complex64]) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::InvalidParameter("a moduli point needs at least one zero".into()));
        }
        if zeros.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite zero".into()));
        }
        // expanding in canonical order makes the chart exactly label-independent
        let zeros = canonical(zeros.to_vec());
        Ok(Self { chart: monic_from_roots(&zeros), zeros })
    }

    /// From chart coefficients `(c_1, ..., c_d)`.
    pub fn from_chart(chart: &[Complex64]) -> Result<Self> {
        if chart.is_empty() {
            return Err(Error::InvalidParameter("empty chart".into()));
        }
        if chart.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite chart coefficient".into()));
        }
        Ok(Self { zeros: canonical(roots(chart)), chart: chart.to_vec() })
    }

    /// From real chart coordinates `(Re c_1, Im c_1, ..., Re c_d, Im c_d)`.
    pub fn from_real_chart(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!("real chart of odd length {}", x.len())));
        }
        let c: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Self::from_chart(&c)
    }

    pub fn degree(&self) -> usize {
        self.chart.len()
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn chart(&self) -> &[Complex64] {
        &self.chart
    }

    pub fn real_chart(&self) -> Vec<f64> {
        self.chart.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn real_zeros(&self) -> Vec<f64> {
        self.zeros.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// Smallest distance between two zeros (infinite for `d = 1`).
    pub fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (a, za) in self.zeros.iter().enumerate() {
            for zb in &self.zeros[a + 1..] {
                m = m.min((za - zb).norm());
            }
        }
        m
    }

    /// Jacobian `d(real chart) / d(real zeros)`, row-major `2d x 2d`, at the
    /// stored zero order. `dc_k / dz_j = -e_{k-1}(zeros without z_j)`
    /// up to the sign `(-1)^k`.
    pub fn chart_jacobian(&self) -> Vec<f64> {
        let d = self.degree();
        let mut jac = vec![0.0; 4 * d * d];
        for j in 0..d {
            let others: Vec<Complex64> = self.zeros.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, z)| *z).collect();
            // monic_from_roots(others)[k-1] = (-1)^k e_k(others)
            let e = if others.is_empty() { Vec::new() } else { monic_from_roots(&others) };
            for k in 0..d {
                // c_{k+1} = (-1)^{k+1} e_{k+1}(all); d/dz_j = (-1)^{k+1} e_k(others)
                // = -[(-1)^k e_k(others)] = -(coefficient k of others, with c_0 = 1)
                let coef = if k == 0 { Complex64::new(1.0, 0.0) } else { e[k - 1] };
                let dc = -coef;
                // complex derivative as a real 2x2 block [[re, -im], [im, re]]
                let (r0, c0) = (2 * k, 2 * j);
                jac[r0 * 2 * d + c0] = dc.re;
                jac[r0 * 2 * d + c0 + 1] = -dc.im;
                jac[(r0 + 1) * 2 * d + c0] = dc.im;
                jac[(r0 + 1) * 2 * d + c0 + 1] = dc.re;
            }
        }
        jac
    }
}

/// Roots of the monic polynomial with coefficients `c` by Aberth–Ehrlich
/// iteration, polished by Newton.
pub fn roots(c: &[Complex64]) -> Vec<Complex64> {
    let d = c.len();
    if d == 1 {
        return vec![-c[0]];
    }
    let deriv = |z: Complex64| {
        // p'(z) by Horner on the derivative coefficients
        let mut acc = Complex64::new(d as f64, 0.0);
        for (k, ck) in c.iter().enumerate().take(d - 1) {
            acc = acc * z + ck * (d - 1 - k) as f64;
        }
        acc
    };
    let radius = 1.0 + c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..d).map(|k| Complex64::from_polar(0.5 * radius, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..d {
            let p = eval_monic(c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / deriv(z[k]);
            let sum: Complex64 = (0..d).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * sum);
            if w.re.is_finite() && w.im.is_finite() {
                z[k] -= w;
                moved = moved.max(w.norm());
            }
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let dp = deriv(*zk);
            if dp.norm() < 1e-300 {
                break;
            }
            let step = eval_monic(c, *zk) / dp;
            if step.re.is_finite() && step.im.is_finite() {
                *zk -= step;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn chart_round_trip(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..5)) {
            let z: Vec<Complex64> = pts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let q = ModuliPoint::from_zeros(&z).unwrap();
            prop_assume!(q.min_separation() > 0.1);
            let back = ModuliPoint::from_chart(q.chart()).unwrap();
            for (a, b) in q.zeros().iter().zip(back.zeros()) {
                prop_assert!((a - b).norm() < 1e-10, "{a} vs {b}");
            }
        }

        #[test]
        fn chart_is_permutation_invariant(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..5)) {
            let z: Vec<Complex64> = pts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let mut r = z.clone();
            r.reverse();
            prop_assert_eq!(ModuliPoint::from_zeros(&z).unwrap(), ModuliPoint::from_zeros(&r).unwrap());
        }
    }

    #[test]
    fn double_root_is_found() {
        let q = ModuliPoint::from_chart(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert!(q.zeros().iter().all(|z| z.norm() < 1e-7));
        // (z - 1)^2 (z + 2i)
        let q0 = ModuliPoint::from_zeros(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.0)]).unwrap();
        let q = ModuliPoint::from_chart(q0.chart()).unwrap();
        assert!((q.zeros()[0] - Complex64::new(0.0, -2.0)).norm() < 1e-10);
        assert!((q.zeros()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let z = [Complex64::new(1.0, 0.5), Complex64::new(-0.7, 0.2), Complex64::new(0.1, -1.3)];
        let q = ModuliPoint::from_zeros(&z).unwrap();
        let jac = q.chart_jacobian();
        let zs = q.zeros().to_vec();
        let eps = 1e-6;
        for col in 0..6 {
            let mut zp = zs.clone();
            let mut zm = zs.clone();
            let dz = if col % 2 == 0 { Complex64::new(eps, 0.0) } else { Complex64::new(0.0, eps) };
            zp[col / 2] += dz;
            zm[col / 2] -= dz;
            let cp: Vec<f64> = monic_from_roots(&zp).iter().flat_map(|c| [c.re, c.im]).collect();
            let cm: Vec<f64> = monic_from_roots(&zm).iter().flat_map(|c| [c.re, c.im]).collect();
            for row in 0..6 {
                let fd = (cp[row] - cm[row]) / (2.0 * eps);
                assert!((fd - jac[row * 6 + col]).abs() < 1e-8, "({row},{col}) {fd} vs {}", jac[row * 6 + col]);
            }
        }
    }
}
