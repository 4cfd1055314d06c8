use approx::assert_relative_eq;
use proptest::prelude::*;

use pmfront::counterexample::{convexity_margin, vt_origin, TaylorDatum};
use pmfront::region::{
    check_monotone_inclusion, check_supercritical_shrinking, heuristic_speed_from_curvature, level_intervals, measured_speed,
    support_front, FrontGeometry, FrontStatus, FrontTrajectory, Orientation, Regime,
};
use pmfront::solvers::{step_adaptive, transform_u_to_v};
use pmfront::{integrate, Boundary, Field1D, Grid1D, Model, NonlinearityProfile, Preset, RunConfig};

fn pm() -> NonlinearityProfile {
    NonlinearityProfile::perona_malik()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn truncated_flux_is_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let p = pm();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(p.truncated_flux(lo).unwrap() <= p.truncated_flux(hi).unwrap());
    }

    #[test]
    fn h_inverse_round_trips(y in 1e-6f64..0.5 - 1e-6) {
        let p = pm();
        let back = p.truncated_flux(p.h_inverse(y).unwrap()).unwrap();
        prop_assert!((back - y).abs() <= 2e-12, "y {y}, h(h^-1(y)) {back}");
    }

    #[test]
    fn g_matches_closed_form(s in 1e-6f64..0.5 - 1e-6) {
        let q = s - s * s;
        let g = pm().coeff_g(s).unwrap();
        prop_assert!((g - (q.sqrt() + 2.0 * q)).abs() <= 1e-8);
    }

    #[test]
    fn cone_speed_scales_inversely_with_outer_radius(r2 in 0.5f64..10.0) {
        let c = pm().constants(r2).unwrap();
        assert_relative_eq!(c.k0, (2.0f64 * 0.5 * 0.5).sqrt() / r2, max_relative = 1e-14);
    }

    #[test]
    fn potential_is_increasing_and_invertible(a in 0.0f64..0.4999, b in 0.0f64..0.4999) {
        let p = pm();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (zl, zh) = (p.potential(lo).unwrap(), p.potential(hi).unwrap());
        prop_assert!(zl <= zh);
        prop_assert!((p.from_potential(zh).unwrap() - hi).abs() <= 1e-9 * (1.0 + hi));
    }

    #[test]
    fn crossings_of_piecewise_linear_gradients_are_exact(
        x0 in 0.05f64..0.95,
        slope in prop_oneof![1.0f64..20.0, -20.0f64..-1.0],
        n in 8usize..200,
    ) {
        // `1 + slope·(x − x0)` crosses the critical level exactly at `x0`;
        // `|slope| < n` keeps it positive, hence `|g|` linear, on that cell.
        prop_assume!(slope.abs() < n as f64);
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let grads: Vec<f64> = xs.iter().map(|x| 1.0 + slope * (x - x0)).collect();
        let sub = level_intervals(&xs, &grads, 0.0, 1.0, Regime::Subcritical);
        // The subcritical band is `(x0 − 2/slope, x0)` or `(x0, x0 + 2/|slope|)`.
        prop_assert_eq!(sub.len(), 1);
        let edge = if slope > 0.0 { sub[0].1 } else { sub[0].0 };
        prop_assert!((edge - x0).abs() <= 1e-12, "edge {edge} vs {x0}");
    }

    #[test]
    fn swapping_coordinates_preserves_the_certificate(
        k1 in 0.1f64..20.0, k2 in 0.1f64..20.0, h1 in -50.0f64..50.0, h2 in -50.0f64..50.0,
    ) {
        let d = TaylorDatum { k1, k2, h1, h2 };
        let s = d.swapped();
        assert_relative_eq!(convexity_margin(&d), convexity_margin(&s), max_relative = 1e-12);
        let (a, b) = (vt_origin(&d, &pm()), vt_origin(&s, &pm()));
        if let (Ok(a), Ok(b)) = (a, b) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn planar_step_never_raises_the_maximum(amp in 0.05f64..0.45, left in 0.05f64..0.4, width in 0.2f64..0.5) {
        let p = pm();
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let v = Preset::Bump { left, right: left + width, amplitude: amp }.sample(grid).unwrap();
        let cfg = RunConfig::new(Model::Fbp1, 1.0, 1.0);
        let top = v.values.iter().cloned().fold(0.0, f64::max);
        let (next, _) = step_adaptive(&v, &cfg, &p, 1.0).unwrap();
        let new_top = next.values.iter().cloned().fold(0.0, f64::max);
        prop_assert!(new_top <= top, "{new_top} > {top}");
    }

    #[test]
    fn subcritical_regions_never_shrink(max_slope in 1.2f64..2.5, n in 60usize..120) {
        let p = pm();
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let u = Preset::Sine { max_slope }.sample(grid).unwrap();
        let traj = integrate(u, RunConfig::new(Model::Pm1d, 0.02, 0.002), &p).unwrap();
        let r = check_monotone_inclusion(&traj, 2);
        prop_assert!(r.holds, "{r:?}");
    }
}

#[test]
fn neumann_scheme_conserves_mass() {
    let p = pm();
    let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
    let u = Preset::Sine { max_slope: 1.5 }.sample(grid).unwrap();
    let mass = |f: &Field1D| f.values.iter().sum::<f64>();
    let m0 = mass(&u);
    let traj = integrate(u, RunConfig::new(Model::Pm1d, 0.05, 0.01), &p).unwrap();
    let drift = (mass(traj.last()) - m0).abs();
    let bound = 10.0 * f64::EPSILON * traj.total_steps as f64 * m0.abs().max(1.0);
    assert!(drift <= bound, "mass drift {drift:e} over {} steps", traj.total_steps);
}

#[test]
fn transformed_solution_matches_the_free_boundary_run() {
    let p = pm();
    let t_end = 0.01;
    let mut errs = Vec::new();
    for n in [100, 200] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let u0 = Preset::Sine { max_slope: 0.8 }.sample(grid).unwrap();
        let v0 = transform_u_to_v(&u0, &p).unwrap();
        let u = integrate(u0, RunConfig::new(Model::Pm1d, t_end, t_end), &p).unwrap();
        // Zero flux for `u` pins `v` at the plateau on the boundary.
        let mut cfg = RunConfig::new(Model::Fbp1, t_end, t_end);
        cfg.boundary = Boundary::Dirichlet;
        let v = integrate(v0, cfg, &p).unwrap();
        let via_u = transform_u_to_v(u.last(), &p).unwrap();
        let err = via_u
            .values
            .iter()
            .zip(&v.last().values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5.0 * grid.spacing(), "n {n}: err {err:e}");
        errs.push(err);
    }
    assert!(errs[1] <= errs[0] * 1.01 + 1e-12, "{errs:?}");
}

#[test]
fn radial_supercritical_regions_never_grow() {
    let p = pm();
    let grid = Grid1D::radial(0.5, 1.5, 120).unwrap();
    let knots = vec![(0.88, 1.3), (0.9, 0.5), (1.1, 0.5), (1.12, 1.3)];
    let u = Preset::GradientProfile { knots }.sample(grid).unwrap();
    let mut cfg = RunConfig::new(Model::PmRadial, 0.05, 0.005);
    cfg.boundary = Boundary::Neumann;
    let traj = integrate(u, cfg, &p).unwrap();
    let r = check_supercritical_shrinking(&traj, 2);
    assert!(r.holds, "{r:?}");
}

#[test]
fn support_edge_moves_at_the_curvature_speed() {
    let p = pm();
    let grid = Grid1D::new(0.0, 1.0, 400).unwrap();
    let v = Preset::Bump { left: 0.3, right: 0.7, amplitude: 0.25 }.sample(grid).unwrap();
    let traj = integrate(v, RunConfig::new(Model::Fbp1, 0.1, 0.0025), &p).unwrap();
    let mut front = FrontTrajectory {
        times: Vec::new(),
        positions: Vec::new(),
        orientation: Orientation::SubcriticalLeft,
        status: FrontStatus::Active,
        end_time: None,
    };
    let mut predicted = Vec::new();
    for snap in &traj.snapshots {
        let (x, zx) = support_front(snap, &p, Orientation::SubcriticalLeft).unwrap().unwrap();
        front.times.push(snap.time);
        front.positions.push(x);
        predicted.push((-zx, heuristic_speed_from_curvature(&p, x, -zx, FrontGeometry::Planar).unwrap()));
    }
    let mut compared = 0;
    for (t, measured) in measured_speed(&front, 0.02) {
        let k = front.times.iter().position(|&s| s == t).unwrap();
        let (uxx, heuristic) = predicted[k];
        if uxx.abs() > 0.1 {
            compared += 1;
            let rel = (measured - heuristic).abs() / heuristic.abs();
            assert!(rel <= 0.25, "t {t}: measured {measured}, heuristic {heuristic}");
        }
    }
    assert!(compared >= 10, "only {compared} samples with visible curvature");
}
