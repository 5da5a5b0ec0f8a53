use std::f64::consts::PI;

use num_complex::Complex64;
use vortexlab::field::{conjugate_to_antivortex, potential_energy, vortex_number};
use vortexlab::solver::{antivortex_residual, solve_taubes, vortex_residual, SolverParams, ZeroDivisor};
use vortexlab::{Error, Grid2D};

fn disk() -> Grid2D {
    Grid2D::disk(10.0, 256).unwrap()
}

/// `|phi|^2 = r^{2d} e^w` for the axisymmetric degree-d vortex on the plane
/// with tau = 1, by shooting on `w(0)`.
fn radial_profile(d: u32, r_max: f64) -> impl Fn(f64) -> f64 {
    let m = 2.0 * d as f64;
    let dr = 1e-3;
    let r0 = 1e-3;
    // y = (w, w'), w'' + w'/r = r^m e^w - 1
    let rhs = move |r: f64, y: [f64; 2]| [y[1], r.powf(m) * y[0].exp() - 1.0 - y[1] / r];
    let shoot = move |w0: f64, keep: bool| -> (i32, Vec<f64>) {
        let mut y = [w0 - r0 * r0 / 4.0, -r0 / 2.0];
        let mut r = r0;
        let mut out = Vec::new();
        while r < r_max {
            if keep {
                out.push(m * r.ln() + y[0]);
            }
            let k1 = rhs(r, y);
            let k2 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            y[0] += dr / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += dr / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            r += dr;
            let u = m * r.ln() + y[0];
            let du = m / r + y[1];
            if u > 0.0 {
                return (1, out);
            }
            if du < 0.0 {
                return (-1, out);
            }
        }
        (0, out)
    };
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match shoot(mid, false).0 {
            1 => hi = mid,
            _ => lo = mid,
        }
    }
    let (_, u) = shoot(lo, true);
    move |r: f64| {
        let k = ((r - r0) / dr).round() as usize;
        u.get(k).map_or(1.0, |u| u.exp())
    }
}

#[test]
fn coincident_pair_matches_radial_shooting() {
    let grid = disk();
    let divisor = ZeroDivisor::new(vec![(Complex64::new(0.0, 0.0), 2)]).unwrap();
    let sol = solve_taubes(&divisor, &grid, &SolverParams::default()).unwrap();
    assert_eq!(vortex_number(&sol.cfg, &grid).unwrap(), 2);
    let e = potential_energy(&sol.cfg, 1.0, &grid).total;
    assert!((e - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "U = {e}");
    // the shooting profile is only trusted where it has not yet peeled off
    let profile = radial_profile(2, 7.0);
    let mut worst: f64 = 0.0;
    for j in 0..grid.n {
        for i in 0..grid.n {
            let r = grid.point(i, j).norm();
            if r < 5.0 {
                worst = worst.max((sol.u[grid.idx(i, j)].exp() - profile(r)).abs());
            }
        }
    }
    assert!(worst < 5e-3, "max | |phi|^2 - shooting | = {worst}");
}

#[test]
fn single_vortex_saturates_and_is_placed() {
    let grid = disk();
    let sol = solve_taubes(&ZeroDivisor::simple(&[Complex64::new(0.0, 0.0)]).unwrap(), &grid, &SolverParams::default()).unwrap();
    let e = potential_energy(&sol.cfg, 1.0, &grid).total;
    assert!((e - PI).abs() < 5e-3 * PI);
    let c = grid.n / 2;
    // the origin sits between four nodes; bilinear value at the centre
    let centre: Complex64 =
        [(c - 1, c - 1), (c, c - 1), (c - 1, c), (c, c)].iter().map(|&(i, j)| sol.cfg.phi[grid.idx(i, j)]).sum::<Complex64>() / 4.0;
    assert!(centre.norm() < 1e-3, "|phi(0)| = {}", centre.norm());
    assert!(sol.residuals.1 < 1e-6, "r2 = {:e}", sol.residuals.1);
    // maximum principle
    assert!(sol.max_modulus_sq() <= 1.0);
}

#[test]
fn degree_three_vortex_number() {
    let grid = Grid2D::disk(10.0, 128).unwrap();
    let zs = [Complex64::new(-2.0, 0.0), Complex64::new(1.0, 1.5), Complex64::new(1.0, -2.0)];
    let sol = solve_taubes(&ZeroDivisor::simple(&zs).unwrap(), &grid, &SolverParams::default()).unwrap();
    assert_eq!(vortex_number(&sol.cfg, &grid).unwrap(), 3);
    let anti = conjugate_to_antivortex(&sol.cfg);
    assert_eq!(vortex_number(&anti, &grid).unwrap(), -3);
    let (a1, a2) = antivortex_residual(&anti, 1.0, &grid);
    let (v1, v2) = vortex_residual(&sol.cfg, 1.0, &grid);
    assert!((a1 - v1).abs() < 1e-12 && (a2 - v2).abs() < 1e-12);
    let du = (potential_energy(&anti, 1.0, &grid).total - potential_energy(&sol.cfg, 1.0, &grid).total).abs();
    assert!(du < 1e-12);
}

#[test]
fn off_centre_zero_is_within_one_cell() {
    let grid = disk();
    let sol = solve_taubes(&ZeroDivisor::simple(&[Complex64::new(3.0, 0.0)]).unwrap(), &grid, &SolverParams::default()).unwrap();
    let zeros = vortexlab::dynamics::track_zeros(&sol.cfg, &grid);
    assert_eq!(zeros.len(), 1);
    assert!((zeros[0].position - Complex64::new(3.0, 0.0)).norm() <= grid.h);
}

#[test]
fn torus_mass_identity_and_threshold() {
    let grid = Grid2D::torus(16.0, 128).unwrap();
    let divisor = ZeroDivisor::simple(&[Complex64::new(3.0, 5.0)]).unwrap();
    let sol = solve_taubes(&divisor, &grid, &SolverParams::default()).unwrap();
    let margin = 256.0 - 4.0 * PI;
    assert!((sol.mass(&grid) - margin).abs() / margin < 1e-6);
    assert!(sol.newton_iters <= 25);
    let at = SolverParams { tau: 4.0 * PI / 256.0, ..Default::default() };
    assert!(matches!(solve_taubes(&divisor, &grid, &at), Err(Error::BradlowViolation { .. })));
}

#[test]
fn modulus_vanishes_toward_the_bound() {
    let grid = Grid2D::torus(16.0, 128).unwrap();
    let divisor = ZeroDivisor::simple(&[Complex64::new(8.0, 8.0)]).unwrap();
    let mut last = f64::INFINITY;
    for margin in [64.0, 16.0, 4.0, 1.0, 0.25] {
        let tau = (margin + 4.0 * PI) / 256.0;
        let sol = solve_taubes(&divisor, &grid, &SolverParams { tau, ..Default::default() }).unwrap();
        let m = sol.max_modulus_sq();
        assert!(m < last, "margin {margin}: max|phi|^2 {m} not below {last}");
        assert!((sol.mass(&grid) - margin).abs() / margin < 1e-6);
        last = m;
    }
    assert!(last < 0.01);
}

#[test]
fn disk_solver_rejects_bad_input() {
    let grid = Grid2D::disk(10.0, 64).unwrap();
    assert!(ZeroDivisor::new(vec![]).is_err());
    let edge = ZeroDivisor::simple(&[Complex64::new(9.9, 0.0)]).unwrap();
    assert!(matches!(solve_taubes(&edge, &grid, &SolverParams::default()), Err(Error::ZeroTooCloseToBoundary { .. })));
    let torus = Grid2D::torus(16.0, 64).unwrap();
    let many = ZeroDivisor::new(vec![(Complex64::new(1.0, 1.0), 21)]).unwrap();
    let r = solve_taubes(&many, &torus, &SolverParams::default());
    assert!(matches!(r, Err(Error::BradlowViolation { .. })), "{r:?}");
}

#[test]
fn first_order_residual_converges_at_second_order() {
    let r1: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let grid = Grid2D::disk(10.0, n).unwrap();
            let sol = solve_taubes(&ZeroDivisor::simple(&[Complex64::new(0.3, -0.2)]).unwrap(), &grid, &SolverParams::default()).unwrap();
            sol.residuals.0
        })
        .collect();
    for w in r1.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.5).contains(&ratio), "r1 {r1:?}");
    }
}
