use num_complex::Complex64;
use serde::Serialize;

use crate::field::{plaquette_windings, transported_corners, FieldConfig};
use crate::grid::Grid2D;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackedZero {
    pub position: Complex64,
    pub winding: i32,
}

/// Zeros of `phi` located by the covariant phase winding of each plaquette,
/// refined inside the plaquette by bilinear interpolation of the transported
/// corner values. Windings sum to the vortex number.
pub fn track_zeros(cfg: &FieldConfig, grid: &Grid2D) -> Vec<TrackedZero> {
    let w = plaquette_windings(cfg, grid);
    let mut out = Vec::new();
    for j in 0..grid.n {
        for i in 0..grid.n {
            let winding = w[grid.idx(i, j)];
            if winding == 0 {
                continue;
            }
            let [p00, p10, p01, p11a, p11b] = transported_corners(cfg, grid, i, j);
            let (s, t) = bilinear_root(p00, p10, p01, 0.5 * (p11a + p11b));
            let base = grid.point(i, j);
            let position = grid.wrap_position(base + Complex64::new(s, t) * grid.h);
            out.push(TrackedZero { position, winding });
        }
    }
    out
}

/// Root in the unit square of the bilinear interpolant, by Newton from the
/// centre; clamped to the square.
fn bilinear_root(p00: Complex64, p10: Complex64, p01: Complex64, p11: Complex64) -> (f64, f64) {
    let (mut s, mut t) = (0.5, 0.5);
    let e = p10 - p00;
    let f = p01 - p00;
    let g = p11 - p10 - p01 + p00;
    for _ in 0..20 {
        let val = p00 + e * s + f * t + g * (s * t);
        let ds = e + g * t;
        let dt = f + g * s;
        // real 2x2 Jacobian [[ds.re, dt.re], [ds.im, dt.im]]
        let det = ds.re * dt.im - dt.re * ds.im;
        if det.abs() < 1e-300 {
            break;
        }
        let step_s = (val.re * dt.im - dt.re * val.im) / det;
        let step_t = (ds.re * val.im - val.re * ds.im) / det;
        s = (s - step_s).clamp(0.0, 1.0);
        t = (t - step_t).clamp(0.0, 1.0);
        if step_s.abs() + step_t.abs() < 1e-14 {
            break;
        }
    }
    (s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_root_recovers_linear_zero() {
        // phi = (x - 0.3) + i (y - 0.7)
        let f = |x: f64, y: f64| Complex64::new(x - 0.3, y - 0.7);
        let (s, t) = bilinear_root(f(0.0, 0.0), f(1.0, 0.0), f(0.0, 1.0), f(1.0, 1.0));
        assert!((s - 0.3).abs() < 1e-12 && (t - 0.7).abs() < 1e-12);
    }

    #[test]
    fn vacuum_has_no_zeros() {
        let g = Grid2D::disk(5.0, 16).unwrap();
        assert!(track_zeros(&FieldConfig::vacuum(&g, 1.0), &g).is_empty());
    }

    #[test]
    fn winding_of_plane_field() {
        let g = Grid2D::disk(5.0, 32).unwrap();
        let z0 = Complex64::new(0.37, -1.21);
        let mut cfg = FieldConfig::zeros(&g);
        for j in 0..g.n {
            for i in 0..g.n {
                cfg.phi[g.idx(i, j)] = g.point(i, j) - z0;
            }
        }
        let zs = track_zeros(&cfg, &g);
        assert_eq!(zs.len(), 1);
        assert_eq!(zs[0].winding, 1);
        assert!((zs[0].position - z0).norm() < 1e-12);
    }
}
