use num_complex::Complex64;
use vortexlab::dynamics::{
    accelerations, gauss_residual, leapfrog_evolve_with, track_zeros, translation_velocity, DynamicState, EvolutionParams, CURRENT_SIGN,
};
use vortexlab::field::gauge_transform;
use vortexlab::moduli::gauge_direction;
use vortexlab::solver::{solve_taubes, SolverParams, ZeroDivisor};
use vortexlab::{FieldConfig, GaugeFunction, Grid2D};

fn vortex(grid: &Grid2D, z: Complex64) -> FieldConfig {
    solve_taubes(&ZeroDivisor::simple(&[z]).unwrap(), grid, &SolverParams::default()).unwrap().cfg
}

fn params(grid: &Grid2D, n_steps: usize) -> EvolutionParams {
    EvolutionParams { dt: 0.5 * grid.h, n_steps, sample_every: n_steps, check_every: 50, tau: 1.0 }
}

fn interior_norm(f: &FieldConfig, grid: &Grid2D) -> f64 {
    let mut s = 0.0;
    for j in 2..grid.n - 2 {
        for i in 2..grid.n - 2 {
            let k = grid.idx(i, j);
            s += f.a1[k] * f.a1[k] + f.a2[k] * f.a2[k] + f.phi[k].norm_sqr();
        }
    }
    (s * grid.area_element()).sqrt()
}

fn smooth_chi(grid: &Grid2D) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let p = grid.point(k % grid.n, k / grid.n);
            0.7 * (0.4 * p.re).sin() * (0.3 * p.im + 0.5).cos()
        })
        .collect()
}

#[test]
fn static_vortex_force_is_second_order() {
    let f: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let g = Grid2D::disk(10.0, n).unwrap();
            interior_norm(&accelerations(&vortex(&g, Complex64::new(0.4, -0.3)), &g, 1.0), &g)
        })
        .collect();
    assert!(f[0] / f[1] > 3.0, "force norms {f:?}");
}

#[test]
fn static_vortex_stays_within_a_cell() {
    let grid = Grid2D::disk(10.0, 128).unwrap();
    let z0 = Complex64::new(0.7, 0.2);
    let state = DynamicState::at_rest(&grid, vortex(&grid, z0)).unwrap();
    let mut worst: f64 = 0.0;
    leapfrog_evolve_with(&state, &grid, &params(&grid, 1000), CURRENT_SIGN, |info| {
        if info.step % 50 == 0 {
            let zs = track_zeros(&info.state.cfg, &grid);
            assert_eq!(zs.len(), 1);
            worst = worst.max((zs[0].position - z0).norm());
        }
        true
    })
    .unwrap();
    assert!(worst < grid.h, "zero moved {worst}");
}

#[test]
fn boosted_vortex_moves_at_the_boost_speed() {
    let grid = Grid2D::disk(10.0, 128).unwrap();
    let z0 = Complex64::new(-1.0, 0.0);
    let cfg = vortex(&grid, z0);
    let v = [0.05, 0.0];
    let vel = translation_velocity(&cfg, &grid, v).unwrap();
    let state = DynamicState::new(&grid, cfg, vel, 0.0).unwrap();
    let p = params(&grid, (40.0 / (0.5 * grid.h)).round() as usize);
    let mut track = vec![(0.0, z0)];
    leapfrog_evolve_with(&state, &grid, &p, CURRENT_SIGN, |info| {
        if info.step % 16 == 0 {
            track.push((info.state.t, track_zeros(&info.state.cfg, &grid)[0].position));
        }
        true
    })
    .unwrap();
    let (t_end, z_end) = *track.last().unwrap();
    assert!(t_end > 39.9);
    let speed = (z_end - track[0].1).norm() / t_end;
    assert!((speed - 0.05).abs() < 0.02 * 0.05, "speed {speed}");
    let worst = track.iter().map(|&(t, z)| (z - (z0 + Complex64::new(v[0], v[1]) * t)).norm()).fold(0.0, f64::max);
    assert!(worst < 0.02 * 0.05 * 40.0 + grid.h, "off the line by {worst}");
}

#[test]
fn evolution_reverses() {
    let grid = Grid2D::disk(10.0, 64).unwrap();
    let cfg = vortex(&grid, Complex64::new(0.5, 0.0));
    let vel = translation_velocity(&cfg, &grid, [0.1, 0.05]).unwrap();
    let s0 = DynamicState::new(&grid, cfg, vel, 0.0).unwrap();
    let p = params(&grid, 200);
    let mut s1 = leapfrog_evolve_with(&s0, &grid, &p, CURRENT_SIGN, |_| true).unwrap();
    s1.a1dot.iter_mut().for_each(|x| *x = -*x);
    s1.a2dot.iter_mut().for_each(|x| *x = -*x);
    s1.phidot.iter_mut().for_each(|x| *x = -*x);
    let s2 = leapfrog_evolve_with(&s1, &grid, &p, CURRENT_SIGN, |_| true).unwrap();
    let back = s2.cfg.axpy(-1.0, &s0.cfg);
    assert!(interior_norm(&back, &grid) < 1e-8, "{}", interior_norm(&back, &grid));
}

#[test]
fn evolution_commutes_with_static_gauge_transformations() {
    let grid = Grid2D::torus(8.0, 32).unwrap();
    let cfg = solve_taubes(&ZeroDivisor::simple(&[Complex64::new(4.0, 4.0)]).unwrap(), &grid, &SolverParams { tau: 2.0, ..Default::default() })
        .unwrap()
        .cfg;
    let vel = translation_velocity(&cfg, &grid, [0.1, -0.1]).unwrap();
    let chi = GaugeFunction::new(smooth_chi(&grid));
    let rotate = |v: &FieldConfig| FieldConfig {
        a1: v.a1.clone(),
        a2: v.a2.clone(),
        phi: v.phi.iter().zip(&chi.chi).map(|(p, c)| p * Complex64::from_polar(1.0, -c)).collect(),
    };
    let p = EvolutionParams { tau: 2.0, ..params(&grid, 100) };
    let a = DynamicState::new(&grid, cfg.clone(), vel.clone(), 0.0).unwrap();
    let b = DynamicState::new(&grid, gauge_transform(&cfg, &chi, &grid), rotate(&vel), 0.0).unwrap();
    let a = leapfrog_evolve_with(&a, &grid, &p, CURRENT_SIGN, |_| true).unwrap();
    let b = leapfrog_evolve_with(&b, &grid, &p, CURRENT_SIGN, |_| true).unwrap();
    let diff = gauge_transform(&a.cfg, &chi, &grid).axpy(-1.0, &b.cfg);
    assert!(interior_norm(&diff, &grid) < 1e-9, "{}", interior_norm(&diff, &grid));
}

#[test]
fn gauss_residual_detects_unconstrained_gauge_modes() {
    let grid = Grid2D::disk(10.0, 64).unwrap();
    let cfg = vortex(&grid, Complex64::new(0.0, 0.0));
    let rest = DynamicState::at_rest(&grid, cfg.clone()).unwrap();
    assert_eq!(gauss_residual(&rest, &grid), 0.0);
    let mode = gauge_direction(&cfg, &smooth_chi(&grid), &grid);
    let moving = DynamicState::new(&grid, cfg, mode, 0.0).unwrap();
    assert!(gauss_residual(&moving, &grid) > 1e-3);
    assert!(leapfrog_evolve_with(&moving, &grid, &params(&grid, 1), CURRENT_SIGN, |_| true).is_err());
}
