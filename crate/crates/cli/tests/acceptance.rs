//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pme_cli::config::ExperimentConfig;
use pme_cli::experiments::{fd_check, run_chain, run_dichotomy};
use pme_core::conditions::{
    check_blowup_conditions, check_chain_conditions, check_global_conditions, find_blowup_params,
    find_chain_params, find_global_params,
};
use pme_core::exponents::{
    admissibility_margin_exact, classify_regime, p_bar_exact, p_under_exact, rat,
};
use pme_core::residual::{
    default_time_probe, residual_chain, residual_sub, residual_super, verify_gluing, ResidualGrid,
};
use pme_core::solver::{
    barenblatt, minimal_solution_sweep, sup_norm, RadialGrid, RunStatus, Solver, SolverConfig,
};
use pme_core::{DensityModel, Error, ProblemSpec, Regime};

/// Residual sign tolerance, relative.
const RESIDUAL_TOL: f64 = 1e-9;
/// Closed form vs finite differences, relative.
const FD_TOL: f64 = 1e-4;
/// Flux continuity of the expanding barrier, relative.
const GLUING_TOL: f64 = 1e-12;
/// Minimum empirical L1 order of the oracle run.
const MIN_ORDER: f64 = 0.8;
/// Blow-up time estimate against the ODE time.
const BLOWUP_REL_TOL: f64 = 0.15;
/// Pointwise ordering against the supersolution, relative to the sup-norm.
const ORDERING_TOL: f64 = 1e-6;
/// Monotonicity in the domain radius.
const SWEEP_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn power_tail(m: f64, p: f64, n: u32, q: f64) -> ProblemSpec {
    ProblemSpec::new(m, p, n, DensityModel::power_tail(q).unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = Vec::new();
    let mut equal_cases = 0;
    for i in 0..10_000 {
        let m = 1.0 + rng.gen_range(1e-3..=4.0);
        let n: u32 = rng.gen_range(3..=6);
        let q = if i % 10 == 0 { 0.0 } else { rng.gen_range(0.0..2.0) };
        let b = 2.0 - q;
        let k1 = rng.gen_range(0.25..=4.0);
        let (mr, br, k1r) = (rat(m), rat(b), rat(k1));
        let k2r = if i % 4 == 0 {
            equal_cases += 1;
            k1r.clone()
        } else {
            // k2/k1 uniformly inside (1, m + (m-1)(N-2)/b)
            let top = admissibility_margin_exact(&mr, n, &br, &rat(1.0), &rat(1.0)) + rat(1.0);
            let ratio = rat(1.0) + (top - rat(1.0)) * rat(rng.gen_range(1e-6..1.0 - 1e-6));
            &k1r * ratio
        };
        let pb = p_bar_exact(&mr, n, &br, &k1r, &k2r).unwrap();
        let pu = p_under_exact(&mr, n, &br, &k1r, &k2r).unwrap();
        let ordered = mr < pu && pu <= pb;
        let eq_iff = (pu == pb) == (k1r == k2r);
        if !(ordered && eq_iff) {
            bad.push(format!("m={m} N={n} q={q} k1={k1}"));
        }
        if q == 0.0 && k1r == k2r {
            let expected = &mr + BigRational::new(BigInt::from(2), BigInt::from(n));
            if pb != expected {
                bad.push(format!("p_bar(m={m}, N={n}) != m + 2/N"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("10000 samples ({equal_cases} with k1 = k2), {} failures {:?}", bad.len(), bad.first()),
    )
}

/// Admissible random spec with loosened but valid constants `k1 <= 1 <= k2`.
fn random_global_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    loop {
        let m = rng.gen_range(1.05..=5.0);
        let n: u32 = rng.gen_range(3..=6);
        let q = rng.gen_range(0.0..1.9);
        let (k1, k2) = (rng.gen_range(0.8..=1.0), rng.gen_range(1.0..=1.25));
        let d = DensityModel::power_tail(q)
            .unwrap()
            .with_constants(k1, k2, 1.0, 1.0)
            .unwrap();
        let Ok(s) = ProblemSpec::new(m, 2.0, n, d) else { continue };
        let c = classify_regime(&s);
        if c.regime == Regime::Inadmissible {
            continue;
        }
        let p = c.p_bar.unwrap() + rng.gen_range(0.05..3.0);
        return s.with_p(p).unwrap();
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut fails: Vec<String> = Vec::new();
    let (mut worst_super, mut worst_sub, mut worst_chain) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);

    for _ in 0..50 {
        let s = random_global_spec(&mut rng);
        let tag = format!("super m={:.3} p={:.3} N={} q={:.3}", s.m, s.p, s.n, s.density.q);
        let g = match find_global_params(&s, 1.0) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let rep = check_global_conditions(&g, &s, 1.0);
        if !(rep.all_satisfied && rep.min_margin() >= 0.0) {
            fails.push(format!("{tag}: conditions"));
            continue;
        }
        let grid = ResidualGrid::for_barrier(&g, 200, 200).unwrap();
        match residual_super(&g, &s, &grid) {
            Ok((_, v)) => {
                worst_super = worst_super.min(v);
                if v < -RESIDUAL_TOL {
                    fails.push(format!("{tag}: residual {v:e}"));
                }
            }
            Err(e) => fails.push(format!("{tag}: {e}")),
        }
    }

    for i in 0..50 {
        let m: f64 = rng.gen_range(1.05..=5.0);
        // a third of the draws on p = m, the rest on both sides
        let p = match i % 3 {
            0 => m,
            1 => rng.gen_range(1.05..m.max(1.06)),
            _ => m + rng.gen_range(0.05..3.0),
        };
        let s = power_tail(m, p, rng.gen_range(3..=6), rng.gen_range(0.0..1.9));
        let tag = format!("sub m={m:.3} p={p:.3} N={} q={:.3}", s.n, s.density.q);
        let w = match find_blowup_params(&s) {
            Ok(w) => w,
            Err(e) => {
                fails.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let rep = check_blowup_conditions(&w, &s);
        if !(rep.all_satisfied && rep.min_margin() >= 0.0) {
            fails.push(format!("{tag}: conditions"));
            continue;
        }
        let grid = ResidualGrid::for_barrier(&w, 200, 200).unwrap();
        match residual_sub(&w, &s, &grid) {
            Ok((_, v)) => {
                worst_sub = worst_sub.max(v);
                if v > RESIDUAL_TOL {
                    fails.push(format!("{tag}: residual {v:e}"));
                }
            }
            Err(e) => fails.push(format!("{tag}: {e}")),
        }
    }

    let mut chain_infeasible = 0;
    let mut chain_done = 0;
    while chain_done < 50 {
        let m = rng.gen_range(1.2..=3.0);
        let n: u32 = rng.gen_range(3..=6);
        let q = rng.gen_range(0.01..0.3);
        let probe = power_tail(m, m, n, q);
        let pu = classify_regime(&probe).p_under.unwrap();
        let p = m + (pu - m) * rng.gen_range(0.0..0.9);
        let s = probe.with_p(p).unwrap();
        let tag = format!("chain m={m:.3} p={p:.3} N={n} q={q:.3}");
        let sub = find_blowup_params(&s).unwrap();
        let ch = match find_chain_params(&s, 0.75, 1.0, &sub, None) {
            Ok(ch) => ch,
            Err(Error::Infeasible(_)) => {
                // outside the admissible q-range of this (m, N)
                chain_infeasible += 1;
                if chain_infeasible > 1000 {
                    fails.push("chain: no feasible draws".into());
                    break;
                }
                continue;
            }
            Err(e) => {
                fails.push(format!("{tag}: {e}"));
                chain_done += 1;
                continue;
            }
        };
        chain_done += 1;
        let rep = check_chain_conditions(&ch, &s);
        if !(rep.all_satisfied && rep.min_margin() >= 0.0) {
            let bad: Vec<_> = rep.entries.iter().filter(|e| e.margin < 0.0).map(|e| format!("{}({:.2e})", e.label, e.margin)).collect();
            fails.push(format!("{tag}: conditions {bad:?}"));
            continue;
        }
        let grid = ResidualGrid::for_barrier(&ch.barrier, 200, 200).unwrap();
        match residual_chain(&ch, &s, &grid) {
            Ok((_, v)) => {
                worst_chain = worst_chain.max(v);
                if v > RESIDUAL_TOL {
                    fails.push(format!("{tag}: residual {v:e}"));
                }
            }
            Err(e) => fails.push(format!("{tag}: {e}")),
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "min super {worst_super:.2e}, max sub {worst_sub:.2e}, max chain {worst_chain:.2e}; \
             {chain_infeasible} chain draws outside the q-range redrawn; {} failures {:?}",
            fails.len(),
            fails
        ),
    )
}

fn criterion_3() -> Outcome {
    let sup = power_tail(2.0, 3.0, 3, 0.3);
    let sub_a = power_tail(2.0, 3.0, 4, 0.5);
    let sub_b = power_tail(3.0, 2.0, 3, 0.2);
    let ch = power_tail(2.0, 2.1, 3, 0.05);
    let mut worst = 0.0_f64;
    let mut lines = Vec::new();
    let mut run = |label: &str, params: pme_core::BarrierParams, spec: &ProblemSpec, seed: u64| {
        let c = fd_check(&params, spec, 100, seed).unwrap();
        worst = worst.max(c.max_rel_error);
        lines.push(format!("{label} {:.1e}", c.max_rel_error));
    };
    run("super", find_global_params(&sup, 1.0).unwrap(), &sup, 31);
    run("sub p>m", find_blowup_params(&sub_a).unwrap(), &sub_a, 32);
    run("sub p<m", find_blowup_params(&sub_b).unwrap(), &sub_b, 33);
    let w = find_blowup_params(&ch).unwrap();
    run("chain", find_chain_params(&ch, 0.75, 1.0, &w, None).unwrap().barrier, &ch, 34);
    outcome(worst <= FD_TOL, format!("100 nodes per barrier: {}", lines.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for q in [0.0, 0.3, 1.2] {
        let s = power_tail(2.0, 3.0, 3, q);
        let g = find_global_params(&s, 1.0).unwrap();
        let rep = verify_gluing(&g, &default_time_probe(&g, 50)).unwrap();
        let worst = rep
            .entries
            .iter()
            .filter(|e| e.label.starts_with("flux"))
            .map(|e| e.lhs / e.rhs * GLUING_TOL)
            .fold(0.0, f64::max);
        ok &= rep.all_satisfied && worst <= GLUING_TOL;
        notes.push(format!("super q={q}: {worst:.1e}"));
    }
    for (m, p, q) in [(2.0, 3.0, 0.5), (3.0, 2.0, 0.8), (2.0, 2.0, 1.5), (2.0, 3.0, 0.0), (3.0, 2.0, 0.0)] {
        let s = power_tail(m, p, 3, q);
        let w = find_blowup_params(&s).unwrap();
        let rep = verify_gluing(&w, &default_time_probe(&w, 50)).unwrap();
        let flux: Vec<_> = rep.entries.iter().filter(|e| e.label.starts_with("flux")).collect();
        let outer_ge = flux.iter().all(|e| e.lhs >= e.rhs);
        let exact = q != 0.0 || flux.iter().all(|e| e.lhs == e.rhs);
        ok &= rep.all_satisfied && outer_ge && exact;
        notes.push(format!("sub m={m} p={p} q={q}: {}", if outer_ge && exact { "ok" } else { "fail" }));
    }
    outcome(ok, notes.join(", "))
}

fn l1_error(u: &[f64], grid: &RadialGrid, t: f64, c0: f64) -> f64 {
    grid.centers
        .iter()
        .zip(&grid.volumes)
        .zip(u)
        .map(|((&r, &vol), &v)| (v - barenblatt(r, t, 2.0, 3, c0)).abs() * vol)
        .sum()
}

fn criterion_5() -> Outcome {
    let c0 = 0.2;
    let (t0, t1) = (1.0, 2.0);
    let spec = ProblemSpec::new(2.0, 2.0, 3, DensityModel::constant()).unwrap();
    let cfg = SolverConfig {
        reaction: false,
        samples: 1,
        ..SolverConfig::default()
    };
    let errs: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(3, 8.0, n).unwrap();
            let u0 = grid.sample(|r| barenblatt(r, t0, 2.0, 3, c0));
            let s = Solver::new(&spec, grid.clone(), cfg);
            let sol = s.evolve(&u0, t1 - t0).unwrap();
            l1_error(sol.final_profile(), &grid, t1, c0)
        })
        .collect();
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    outcome(
        errs[0] > errs[1] && errs[1] > errs[2] && o1 >= MIN_ORDER && o2 >= MIN_ORDER,
        format!("L1 errors {:.3e}, {:.3e}, {:.3e}; orders {o1:.2}, {o2:.2}", errs[0], errs[1], errs[2]),
    )
}

fn criterion_6() -> Outcome {
    let spec = ProblemSpec::new(2.0, 2.0, 3, DensityModel::constant()).unwrap();
    let grid = RadialGrid::new(3, 20.0, 400).unwrap();
    let u0 = grid.sample(|r| (1.0 - (r - 10.0).max(0.0)).max(0.0));
    let cfg = SolverConfig {
        record_steps: true,
        samples: 100,
        ..SolverConfig::default()
    };
    let sol = Solver::new(&spec, grid, cfg).evolve(&u0, 2.0).unwrap();
    let envelope_ok = sol
        .trajectory
        .iter()
        .filter(|r| r.t <= 0.9)
        .all(|r| r.sup_norm <= 1.0 / (1.0 - r.t) * (1.0 + 1e-12));
    let s = sol.blowup_time.unwrap_or(f64::NAN);
    let rel = (s - 1.0).abs();
    outcome(
        (sup_norm(&u0) - 1.0).abs() < 1e-15
            && envelope_ok
            && sol.status == RunStatus::BlewUp
            && rel <= BLOWUP_REL_TOL,
        format!(
            "envelope {}, status {}, S = {s:.4} ({:.1}% off)",
            if envelope_ok { "holds" } else { "violated" },
            sol.status.as_str(),
            100.0 * rel
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig::parse(
        "scenario = dichotomy\nm = 2\np = 3/2, 2, 8/3, 3, 4\nN = 3\ndensity.q = 0\n\
         grid.n = 400\nu0.kind = bump\nu0.amplitude = 1\nu0.radius = 2\nu0.fraction = 1/2\n",
    )
    .unwrap();
    let rows = run_dichotomy(&cfg).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for r in &rows {
        ok &= r.large_status == RunStatus::BlewUp;
        if r.p >= 3.0 {
            let v = r.small_violation.unwrap_or(f64::INFINITY);
            ok &= r.small_status == RunStatus::Completed && v <= ORDERING_TOL;
            notes.push(format!("p={} small {} (violation {v:.1e})", r.p, r.small_status.as_str()));
        }
        if r.p == 1.5 {
            ok &= r.small_status == RunStatus::BlewUp;
            notes.push(format!("p=1.5 small {}", r.small_status.as_str()));
        }
    }
    let large: Vec<_> = rows.iter().map(|r| r.large_status.as_str()).collect();
    outcome(ok, format!("large data {large:?}; {}", notes.join(", ")))
}

fn criterion_8() -> Outcome {
    let cfg = ExperimentConfig::parse(
        "scenario = chain\nm = 2\np = 2.1\nN = 3\ndensity.q = 0.05\ngrid.R = 40\ngrid.n = 800\n\
         u0.kind = bump\nu0.amplitude = 1\nu0.radius = 2\n",
    )
    .unwrap();
    match run_chain(&cfg) {
        Ok(rep) => {
            let links: Vec<_> = rep.links.iter().map(|l| format!("{:.2e}", l.margin)).collect();
            outcome(
                rep.conditions.all_satisfied && rep.verify().is_ok(),
                format!(
                    "link margins {links:?}, S = {:?}, t1 + T = {:.3e}",
                    rep.solution.blowup_time, rep.window
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_9() -> Outcome {
    let spec = power_tail(2.0, 3.0, 3, 0.5);
    let cfg = SolverConfig {
        samples: 20,
        ..SolverConfig::default()
    };
    let rep = minimal_solution_sweep(&spec, |r| (1.0 - (r / 2.0).powi(2)).max(0.0), &[4.0, 8.0, 16.0], 0.05, 4.0, cfg)
        .unwrap();
    let worst = rep.max_violation.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let touched = rep.solutions[0].boundary_touched;
    outcome(
        worst <= SWEEP_TOL,
        format!("max (u_R - u_2R) = {worst:.2e}; smallest ball reached by the support: {touched}"),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("exponent suite", Duration::from_secs(5), criterion_1),
        ("residual certificates", Duration::from_secs(120), criterion_2),
        ("derivative cross-check", Duration::from_secs(10), criterion_3),
        ("gluing", Duration::from_secs(1), criterion_4),
        ("solver oracle", Duration::from_secs(120), criterion_5),
        ("ODE envelope", Duration::from_secs(60), criterion_6),
        ("dichotomy", Duration::from_secs(600), criterion_7),
        ("chain", Duration::from_secs(300), criterion_8),
        ("minimal-solution monotonicity", Duration::from_secs(120), criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {name} [{:.2}s / {}s]: {}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
