use pme_core::conditions::{find_blowup_params, find_global_params};
use pme_core::solver::{
    comparison_test, evolve, ode_blowup_time, sup_norm, Direction, RadialGrid, RunStatus, Solver,
    SolverConfig,
};
use pme_core::{DensityModel, Error, ProblemSpec};

fn spec(m: f64, p: f64, q: f64) -> ProblemSpec {
    ProblemSpec::new(m, p, 3, DensityModel::power_tail(q).unwrap()).unwrap()
}

#[test]
fn weighted_mass_is_conserved_without_reaction_before_the_boundary() {
    let s = spec(2.0, 2.0, 0.5);
    let cfg = SolverConfig {
        reaction: false,
        samples: 10,
        ..SolverConfig::default()
    };
    let grid = RadialGrid::new(3, 10.0, 400).unwrap();
    let u0 = grid.sample(|r| (1.0 - r * r).max(0.0));
    let sol = evolve(&s, grid, &u0, 1.0, cfg).unwrap();
    assert!(!sol.boundary_touched);
    let m0 = sol.trajectory[0].weighted_mass;
    for row in &sol.trajectory {
        assert!((row.weighted_mass - m0).abs() <= 1e-10 * m0, "{row:?}");
    }
}

#[test]
fn half_supersolution_stays_below_it() {
    let s = spec(2.0, 3.0, 0.0);
    let g = find_global_params(&s, 1.0).unwrap();
    let r_max = 2.0 * g.support_radius(2.0 * g.t_offset).unwrap();
    let grid = RadialGrid::new(3, r_max, 300).unwrap();
    let u0 = grid.sample(|r| 0.5 * g.eval(r, 0.0).unwrap());
    let sol = evolve(&s, grid, &u0, 2.0 * g.t_offset, SolverConfig::default()).unwrap();
    assert_eq!(sol.status, RunStatus::Completed);
    // discretisation error concentrates at the free boundary
    let rep = comparison_test(&sol, &g, Direction::Below, 1e-4 * sup_norm(&u0)).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn subsolution_datum_blows_up_before_its_horizon() {
    let s = spec(2.0, 3.0, 0.0);
    let w = find_blowup_params(&s).unwrap();
    let grid = RadialGrid::new(3, 4.0 * w.support_radius(0.0).unwrap(), 300).unwrap();
    let u0 = grid.sample(|r| w.eval(r, 0.0).unwrap());
    let sol = evolve(&s, grid, &u0, 2.0 * w.t_offset, SolverConfig::default()).unwrap();
    assert_eq!(sol.status, RunStatus::BlewUp);
    assert!(sol.blowup_time.unwrap() <= w.t_offset * 1.05);
    assert!(comparison_test(&sol, &w, Direction::Above, 1e-9 * sup_norm(&u0)).unwrap().pass);
}

#[test]
fn blowup_time_of_flat_data_tracks_the_ode() {
    let s = ProblemSpec::new(2.0, 3.0, 3, DensityModel::constant()).unwrap();
    let grid = RadialGrid::new(3, 12.0, 240).unwrap();
    let u0 = grid.sample(|r| if r < 8.0 { 2.0 } else { (2.0 * (9.0 - r)).clamp(0.0, 2.0) });
    let sol = evolve(&s, grid, &u0, 1.0, SolverConfig::default()).unwrap();
    let tau = ode_blowup_time(2.0, 3.0);
    assert_eq!(sol.status, RunStatus::BlewUp);
    assert!((sol.blowup_time.unwrap() - tau).abs() <= 0.15 * tau);
}

#[test]
fn oversized_step_is_refused() {
    let s = Solver::new(&spec(2.0, 2.0, 0.0), RadialGrid::new(3, 1.0, 50).unwrap(), SolverConfig::default());
    let mut u = s.grid.sample(|r| 1.0 - r * r);
    let dt = 10.0 * s.stable_dt(&u);
    assert!(matches!(s.step(&mut u, dt), Err(Error::StabilityViolation { .. })));
}

#[test]
fn identical_runs_are_identical() {
    let s = spec(2.0, 2.5, 0.2);
    let grid = RadialGrid::new(3, 6.0, 200).unwrap();
    let u0 = grid.sample(|r| (1.0 - r * r / 4.0).max(0.0));
    let a = evolve(&s, grid.clone(), &u0, 2.0, SolverConfig::default()).unwrap();
    let b = evolve(&s, grid, &u0, 2.0, SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}
