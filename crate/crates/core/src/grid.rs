//! Discrete square domains with cell-centred nodes.
//!
//! A torus of side `L` has nodes at `((i + 1/2) h, (j + 1/2) h)`, `h = L / n`,
//! with periodic wraparound. The "disk" domain is the plane surrogate: the box
//! `[-R, R]^2` with nodes at `(-R + (i + 1/2) h, ...)`, `h = 2R / n`, whose
//! outermost ring of nodes carries Dirichlet data. Fields are stored row-major,
//! index `j * n + i` with `i` along `x1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    Torus { side: f64 },
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub domain: DomainKind,
    pub n: usize,
    pub h: f64,
}

impl Grid2D {
    pub fn new(domain: DomainKind, n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n = {n} is below {MIN_POINTS}")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} is odd")));
        }
        let extent = match domain {
            DomainKind::Torus { side } => side,
            DomainKind::Disk { radius } => 2.0 * radius,
        };
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("non-positive extent {extent}")));
        }
        Ok(Self { domain, n, h: extent / n as f64 })
    }

    pub fn torus(side: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Torus { side }, n)
    }

    pub fn disk(radius: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Disk { radius }, n)
    }

    #[inline]
    pub fn is_torus(&self) -> bool {
        matches!(self.domain, DomainKind::Torus { .. })
    }

    /// Side length of the computational square.
    pub fn side(&self) -> f64 {
        self.h * self.n as f64
    }

    pub fn area_element(&self) -> f64 {
        self.h * self.h
    }

    pub fn area(&self) -> f64 {
        let s = self.side();
        s * s
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lower-left corner of the computational square.
    pub fn origin(&self) -> f64 {
        match self.domain {
            DomainKind::Torus { .. } => 0.0,
            DomainKind::Disk { radius } => -radius,
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin() + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.coord(i), self.coord(j))
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Forward neighbour index along an axis, wrapping on the torus.
    /// Returns `None` past the edge of the box.
    #[inline]
    pub fn next(&self, i: usize) -> Option<usize> {
        if i + 1 < self.n {
            Some(i + 1)
        } else if self.is_torus() {
            Some(0)
        } else {
            None
        }
    }

    #[inline]
    pub fn prev(&self, i: usize) -> Option<usize> {
        if i > 0 {
            Some(i - 1)
        } else if self.is_torus() {
            Some(self.n - 1)
        } else {
            None
        }
    }

    /// Whether node `(i, j)` lies on the Dirichlet ring of the box.
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        !self.is_torus() && (i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n)
    }

    /// Whether the link from `(i, j)` along `axis` (0 or 1) exists.
    #[inline]
    pub fn has_link(&self, i: usize, j: usize, axis: usize) -> bool {
        self.is_torus() || if axis == 0 { i + 1 < self.n } else { j + 1 < self.n }
    }

    /// Whether the plaquette with lower-left corner `(i, j)` exists.
    #[inline]
    pub fn has_plaquette(&self, i: usize, j: usize) -> bool {
        self.is_torus() || (i + 1 < self.n && j + 1 < self.n)
    }

    /// Reduce a position into the fundamental domain of the torus.
    pub fn wrap_position(&self, z: Complex64) -> Complex64 {
        match self.domain {
            DomainKind::Torus { side } => Complex64::new(z.re.rem_euclid(side), z.im.rem_euclid(side)),
            DomainKind::Disk { .. } => z,
        }
    }

    /// Smallest periodic image of a displacement (identity on the disk).
    pub fn min_image(&self, dz: Complex64) -> Complex64 {
        match self.domain {
            DomainKind::Torus { side } => {
                let f = |x: f64| x - side * (x / side).round();
                Complex64::new(f(dz.re), f(dz.im))
            }
            DomainKind::Disk { .. } => dz,
        }
    }

    /// Node nearest to a position (clamped to the box on the disk).
    pub fn nearest_node(&self, z: Complex64) -> (usize, usize) {
        let z = self.wrap_position(z);
        let f = |x: f64| {
            let k = ((x - self.origin()) / self.h - 0.5).round();
            if self.is_torus() {
                (k as i64).rem_euclid(self.n as i64) as usize
            } else {
                k.clamp(0.0, (self.n - 1) as f64) as usize
            }
        };
        (f(z.re), f(z.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing() {
        assert_eq!(Grid2D::torus(16.0, 128).unwrap().h, 0.125);
        assert!((Grid2D::disk(10.0, 200).unwrap().h - 0.1).abs() < 1e-15);
        assert_eq!(Grid2D::torus(16.0, 128).unwrap().area(), 256.0);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(Grid2D::torus(16.0, 127).is_err());
        assert!(Grid2D::torus(16.0, 8).is_err());
        assert!(Grid2D::disk(-1.0, 64).is_err());
        assert!(Grid2D::torus(0.0, 64).is_err());
    }

    #[test]
    fn cell_centred_nodes() {
        let g = Grid2D::disk(10.0, 200).unwrap();
        assert!((g.coord(0) + 9.95).abs() < 1e-12);
        assert!((g.coord(100) - 0.05).abs() < 1e-12);
        let t = Grid2D::torus(16.0, 16).unwrap();
        assert_eq!(t.next(15), Some(0));
        assert_eq!(t.prev(0), Some(15));
        assert_eq!(t.nearest_node(Complex64::new(16.2, -0.3)), (0, 15));
    }
}
