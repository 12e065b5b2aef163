use std::collections::HashMap;

use pme_core::barriers::k_constant;
use pme_core::conditions::{
    check_blowup_conditions, check_global_conditions, find_blowup_params, find_chain_params,
    find_global_params,
};
use pme_core::residual::{default_time_probe, phi_endpoint_check, residual_at, verify_gluing};
use pme_core::{BarrierParams, DensityModel, Error, Family, ProblemSpec, Region, Side, SystemKind};

fn spec(m: f64, p: f64, n: u32, q: f64) -> ProblemSpec {
    ProblemSpec::new(m, p, n, DensityModel::power_tail(q).unwrap()).unwrap()
}

#[test]
fn k_constant_matches_closed_form() {
    // c = 1/3 at (m, p) = (2, 3)
    let c: f64 = 1.0 / 3.0;
    assert!((k_constant(2.0, 3.0) - (c.powf(0.5) - c.powf(1.5))).abs() < 1e-15);
}

#[test]
fn record_round_trip() {
    let g = find_global_params(&spec(2.0, 3.0, 3, 0.4), 1.0).unwrap();
    let rec: HashMap<&str, String> = g.to_record().into_iter().collect();
    let back = BarrierParams::from_record(|k| rec.get(k).map(String::as_str)).unwrap();
    assert_eq!(back, g);
}

#[test]
fn blowup_cases_by_exponent() {
    let cases = [(2.0, 3.0, SystemKind::BlowupA), (3.0, 2.0, SystemKind::BlowupB), (2.0, 2.0, SystemKind::BlowupC)];
    for (m, p, sys) in cases {
        let s = spec(m, p, 3, 0.3);
        let w = find_blowup_params(&s).unwrap();
        let rep = check_blowup_conditions(&w, &s);
        assert_eq!(rep.system, sys);
        assert!(rep.all_satisfied, "{rep}");
        assert_eq!(w.family, Family::Sub);
    }
}

#[test]
fn global_params_satisfy_their_system() {
    for (m, p, q) in [(2.0, 3.0, 0.0), (1.5, 4.0, 0.7), (3.0, 5.0, 1.5)] {
        let s = spec(m, p, 4, q);
        let g = find_global_params(&s, 2.0).unwrap();
        assert!(check_global_conditions(&g, &s, 2.0).all_satisfied);
    }
}

#[test]
fn below_p_bar_is_infeasible() {
    assert!(matches!(find_global_params(&spec(2.0, 2.5, 3, 0.0), 1.0), Err(Error::Infeasible(_))));
}

#[test]
fn chain_needs_positive_q_and_p_below_p_under() {
    let s = spec(2.0, 2.1, 3, 0.0);
    let w = find_blowup_params(&s).unwrap();
    assert!(matches!(find_chain_params(&s, 0.75, 1.0, &w, None), Err(Error::Infeasible(_))));
    let s = spec(2.0, 2.9, 3, 0.05);
    let w = find_blowup_params(&s).unwrap();
    assert!(matches!(find_chain_params(&s, 0.75, 1.0, &w, None), Err(Error::Infeasible(_))));
}

#[test]
fn gluing_and_phi_checks_pass_for_constructed_barriers() {
    let s = spec(2.0, 3.0, 3, 0.5);
    for b in [find_global_params(&s, 1.0).unwrap(), find_blowup_params(&s).unwrap()] {
        let probe = default_time_probe(&b, 40);
        assert!(verify_gluing(&b, &probe).unwrap().all_satisfied);
        assert!(phi_endpoint_check(&b, &probe).unwrap().all_satisfied);
    }
}

#[test]
fn residual_vanishes_outside_the_support() {
    let s = spec(2.0, 3.0, 3, 0.0);
    let g = find_global_params(&s, 1.0).unwrap();
    let far = 10.0 * g.support_radius(0.0).unwrap();
    let r = residual_at(&g, &s.density, far, Side::Outer, 0.0).unwrap();
    assert_eq!(r.region, Region::Outside);
    assert_eq!(r.value, 0.0);
}
