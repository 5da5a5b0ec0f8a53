//! Binary field snapshots.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  content
//! 0       4     magic: b"GLF1" (static fields) or b"GLD1" (fields + velocities)
//! 4       4     u32 domain kind: 0 = torus, 1 = disk
//! 8       8     f64 extent: side L (torus) or radius R (disk)
//! 16      4     u32 n (points per side)
//! 20      8     f64 time t                         (GLD1 only)
//! ...           n*n f64 each, row-major (index j*n + i, i along x1):
//!               a1, a2, Re phi, Im phi
//!               a1dot, a2dot, Re phidot, Im phidot  (GLD1 only)
//! ```
//!
//! `a1[j*n+i]` is the link from node (i, j) to (i+1, j); `a2` the link to
//! (i, j+1). Unused links on the disk edge are stored as 0.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::grid::{DomainKind, Grid2D};

pub const MAGIC_STATIC: &[u8; 4] = b"GLF1";
pub const MAGIC_DYNAMIC: &[u8; 4] = b"GLD1";

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], grid: &Grid2D) -> Result<()> {
    let (kind, extent) = match grid.domain {
        DomainKind::Torus { side } => (0u32, side),
        DomainKind::Disk { radius } => (1u32, radius),
    };
    w.write_all(magic)?;
    w.write_all(&kind.to_le_bytes())?;
    w.write_all(&extent.to_le_bytes())?;
    w.write_all(&(grid.n as u32).to_le_bytes())?;
    Ok(())
}

fn write_fields<W: Write>(w: &mut W, cfg: &FieldConfig) -> Result<()> {
    let mut buf = Vec::with_capacity(cfg.phi.len() * 32);
    for x in cfg.a1.iter().chain(&cfg.a2) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for z in &cfg.phi {
        buf.extend_from_slice(&z.re.to_le_bytes());
    }
    for z in &cfg.phi {
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_static<W: Write>(w: &mut W, grid: &Grid2D, cfg: &FieldConfig) -> Result<()> {
    cfg.check(grid)?;
    write_header(w, MAGIC_STATIC, grid)?;
    write_fields(w, cfg)
}

/// `vel` holds `(a1dot, a2dot, phidot)` in the same layout as `cfg`.
pub fn write_dynamic<W: Write>(w: &mut W, grid: &Grid2D, t: f64, cfg: &FieldConfig, vel: &FieldConfig) -> Result<()> {
    cfg.check(grid)?;
    vel.check(grid)?;
    write_header(w, MAGIC_DYNAMIC, grid)?;
    w.write_all(&t.to_le_bytes())?;
    write_fields(w, cfg)?;
    write_fields(w, vel)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_fields<R: Read>(r: &mut R, len: usize) -> Result<FieldConfig> {
    let mut raw = vec![0u8; len * 32];
    r.read_exact(&mut raw)?;
    let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let phi = (0..len).map(|k| Complex64::new(vals[2 * len + k], vals[3 * len + k])).collect();
    Ok(FieldConfig { a1: vals[..len].to_vec(), a2: vals[len..2 * len].to_vec(), phi })
}

/// Returns the grid, the fields and, for GLD1, `(t, velocities)`.
#[allow(clippy::type_complexity)]
pub fn read<R: Read>(r: &mut R) -> Result<(Grid2D, FieldConfig, Option<(f64, FieldConfig)>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    let dynamic = match &magic {
        m if m == MAGIC_STATIC => false,
        m if m == MAGIC_DYNAMIC => true,
        _ => return Err(Error::Format(format!("bad magic {magic:?}"))),
    };
    let kind = read_u32(r)?;
    let extent = read_f64(r)?;
    let n = read_u32(r)? as usize;
    let domain = match kind {
        0 => DomainKind::Torus { side: extent },
        1 => DomainKind::Disk { radius: extent },
        k => return Err(Error::Format(format!("unknown domain kind {k}"))),
    };
    let grid = Grid2D::new(domain, n)?;
    let t = if dynamic { Some(read_f64(r)?) } else { None };
    let cfg = read_fields(r, grid.len())?;
    let vel = match t {
        Some(t) => Some((t, read_fields(r, grid.len())?)),
        None => None,
    };
    Ok((grid, cfg, vel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = Grid2D::disk(10.0, 16).unwrap();
        let cfg = FieldConfig::vacuum(&g, 1.0);
        let mut buf = Vec::new();
        write_static(&mut buf, &g, &cfg).unwrap();
        assert_eq!(&buf[..4], b"GLF1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), 10.0);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 16);
        assert_eq!(buf.len(), 20 + 4 * 256 * 8);
        // Re phi block starts after a1 and a2
        let off = 20 + 2 * 256 * 8;
        assert_eq!(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()), 1.0);
        assert!(read(&mut &b"XXXX"[..]).is_err());
    }

    proptest! {
        #[test]
        fn dynamic_roundtrip(seed in 0u64..1000, t in -1e3f64..1e3) {
            let g = Grid2D::torus(5.0, 16).unwrap();
            let f = |k: usize, s: u64| ((k as u64 * 2654435761 + s) % 1000) as f64 / 250.0 - 2.0;
            let mk = |s: u64| FieldConfig {
                a1: (0..g.len()).map(|k| f(k, s)).collect(),
                a2: (0..g.len()).map(|k| f(k, s + 1)).collect(),
                phi: (0..g.len()).map(|k| Complex64::new(f(k, s + 2), f(k, s + 3))).collect(),
            };
            let (cfg, vel) = (mk(seed), mk(seed + 7));
            let mut buf = Vec::new();
            write_dynamic(&mut buf, &g, t, &cfg, &vel).unwrap();
            let (g2, c2, v2) = read(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(g2, g);
            prop_assert_eq!(c2, cfg);
            let (t2, v2) = v2.unwrap();
            prop_assert_eq!(t2, t);
            prop_assert_eq!(v2, vel);
        }
    }
}
