//! Experiment drivers behind the subcommands.

use rayon::prelude::*;

use pme_core::conditions::{
    check_blowup_conditions, check_chain_conditions, check_global_conditions,
    find_blowup_params_with_horizon, find_chain_params, find_global_params,
};
use pme_core::exponents::{classify_regime, Regime};
use pme_core::residual::{
    default_time_probe, phi_endpoint_check, residual_chain, residual_sub, residual_super,
    verify_gluing, ResidualGrid,
};
use pme_core::solver::{comparison_test, ComparisonReport, Direction, SolverConfig};
use pme_core::{
    BarrierParams, ChainParams, ConditionReport, Error, Family, ProblemSpec, RadialGrid,
    RadialSolution, ResidualField, RunStatus,
};

use crate::config::{ExperimentConfig, InitialKind};
use crate::error::CliResult;

/// Relative tolerance of the numeric comparison with a supersolution.
pub const COMPARISON_TOL: f64 = 1e-6;

/// Initial datum of one run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `fraction` times a barrier at `t = 0`.
    Barrier { params: BarrierParams, fraction: f64 },
    Bump { amplitude: f64, radius: f64 },
    Plateau { amplitude: f64, radius: f64 },
}

impl InitialData {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            InitialData::Barrier { params, fraction } => {
                fraction * params.eval(r, 0.0).expect("barriers are defined at t = 0")
            }
            InitialData::Bump { amplitude, radius } => {
                amplitude * (1.0 - (r / radius).powi(2)).max(0.0)
            }
            InitialData::Plateau { amplitude, radius } => {
                amplitude * (1.0 - (r - radius).max(0.0)).max(0.0)
            }
        }
    }

    /// Radius outside which the datum vanishes.
    pub fn support(&self) -> CliResult<f64> {
        Ok(match self {
            InitialData::Barrier { params, .. } => params.support_radius(0.0)?,
            InitialData::Bump { radius, .. } => *radius,
            InitialData::Plateau { radius, .. } => radius + 1.0,
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            InitialData::Barrier { params, .. } => match params.family {
                Family::Super => "barrier-super-fraction",
                _ => "barrier-sub",
            },
            InitialData::Bump { .. } => "bump",
            InitialData::Plateau { .. } => "plateau",
        }
    }

    fn barrier(&self) -> Option<&BarrierParams> {
        match self {
            InitialData::Barrier { params, .. } => Some(params),
            _ => None,
        }
    }
}

/// Datum selected by `u0.kind`.
pub fn initial_data(cfg: &ExperimentConfig, spec: &ProblemSpec) -> CliResult<InitialData> {
    Ok(match cfg.u0 {
        InitialKind::BarrierSub => InitialData::Barrier {
            params: find_blowup_params_with_horizon(spec, cfg.sub_horizon)?,
            fraction: 1.0,
        },
        InitialKind::BarrierSuperFraction => InitialData::Barrier {
            params: find_global_params(spec, cfg.r0)?,
            fraction: cfg.u0_fraction,
        },
        InitialKind::Bump => InitialData::Bump {
            amplitude: cfg.u0_amplitude,
            radius: cfg.u0_radius,
        },
        InitialKind::Plateau => InitialData::Plateau {
            amplitude: cfg.u0_amplitude,
            radius: cfg.u0_radius,
        },
    })
}

/// Horizon policy: `10 T` above a supersolution, `2 T` from a blow-up
/// subsolution, otherwise the configured value (default 10).
pub fn horizon_for(cfg: &ExperimentConfig, data: &InitialData) -> f64 {
    if let Some(h) = cfg.horizon {
        return h;
    }
    match data.barrier() {
        Some(b) if b.family == Family::Super => 10.0 * b.t_offset,
        Some(b) => 2.0 * b.t_offset,
        None => 10.0,
    }
}

/// Blow-up threshold relative to `|u0|_inf` when `M_blow` is not configured.
pub const BLOW_FACTOR: f64 = 1e4;

/// Blow-up threshold of a run from `u0`; every datum here peaks at `r = 0`.
pub fn m_blow_for(cfg: &ExperimentConfig, data: &InitialData) -> f64 {
    cfg.m_blow
        .unwrap_or(BLOW_FACTOR * data.eval(0.0).max(1.0))
}

/// Largest support of a blow-up subsolution before its peak reaches `level`.
fn sub_support_until(b: &BarrierParams, level: f64) -> CliResult<f64> {
    let r0 = b.support_radius(0.0)?;
    if b.c * b.time_factors(0.0)?.zeta >= level {
        return Ok(r0);
    }
    let t = b.t_offset - (b.c / level).powf(1.0 / b.alpha);
    Ok(r0.max(b.support_radius(t)?))
}

/// Outer radius: twice the supersolution free boundary over the horizon;
/// for a subsolution datum, 1.25 times its support up to the time its peak
/// reaches the blow-up threshold, so the comparison holds until then;
/// four times the support of any other datum.
pub fn radius_for(
    cfg: &ExperimentConfig,
    data: &InitialData,
    horizon: f64,
    m_blow: f64,
) -> CliResult<f64> {
    if let Some(r) = cfg.grid_r {
        return Ok(r);
    }
    Ok(match data.barrier() {
        Some(b) if b.family == Family::Super => 2.0 * b.support_radius(horizon)?.max(1.0),
        Some(b) if b.family == Family::Sub => {
            (1.25 * sub_support_until(b, m_blow)?).max(4.0 * data.support()?.max(1.0))
        }
        _ => 4.0 * data.support()?.max(1.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub spec: ProblemSpec,
    pub data: InitialData,
    pub horizon: f64,
    pub solution: RadialSolution,
    /// Ordering against the barrier the datum was built from.
    pub comparison: Option<ComparisonReport>,
}

pub fn solver_config(cfg: &ExperimentConfig, m_blow: f64) -> SolverConfig {
    SolverConfig {
        m_blow: Some(m_blow),
        samples: cfg.samples,
        ..SolverConfig::default()
    }
}

/// Run one datum; the comparison is `u <= w` for a supersolution datum and
/// `u >= w` for a subsolution datum.
pub fn run_case(
    cfg: &ExperimentConfig,
    spec: &ProblemSpec,
    data: InitialData,
    horizon: f64,
) -> CliResult<SimulationOutput> {
    let m_blow = m_blow_for(cfg, &data);
    let r_max = radius_for(cfg, &data, horizon, m_blow)?;
    let grid = RadialGrid::new(spec.n, r_max, cfg.grid_n)?;
    let u0 = grid.sample(|r| data.eval(r));
    let solution = pme_core::solver::evolve(spec, grid, &u0, horizon, solver_config(cfg, m_blow))?;
    let comparison = match data.barrier() {
        Some(b) => {
            let scale = u0.iter().copied().fold(0.0, f64::max);
            let dir = if b.family == Family::Super {
                Direction::Below
            } else {
                Direction::Above
            };
            Some(comparison_test(&solution, b, dir, COMPARISON_TOL * scale)?)
        }
        None => None,
    };
    Ok(SimulationOutput {
        spec: spec.clone(),
        data,
        horizon,
        solution,
        comparison,
    })
}

pub fn run_simulation(cfg: &ExperimentConfig) -> CliResult<SimulationOutput> {
    let spec = cfg.spec(cfg.p0())?;
    let data = initial_data(cfg, &spec)?;
    let horizon = horizon_for(cfg, &data);
    run_case(cfg, &spec, data, horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyRow {
    pub p: f64,
    pub regime: Regime,
    pub small_datum: &'static str,
    pub small_status: RunStatus,
    pub small_blowup_time: Option<f64>,
    /// `max (u - w)` against the supersolution, relative to `|u0|`.
    pub small_violation: Option<f64>,
    pub small_horizon: f64,
    pub large_status: RunStatus,
    pub large_blowup_time: Option<f64>,
}

/// Domain radius of a small bump datum relative to its support. The Dirichlet
/// problem on a small ball stays bounded when `p < m`, so the ball must be wide
/// enough for the spreading solution to reach the blow-up threshold first.
pub const BUMP_DOMAIN_FACTOR: f64 = 50.0;
/// Horizon of a small bump run when `horizon` is not configured.
pub const BUMP_HORIZON: f64 = 50.0;

/// Small data (half the supersolution when it exists, otherwise a bump) and
/// large data (the blow-up subsolution at `t = 0`) for every exponent of the sweep.
pub fn run_dichotomy(cfg: &ExperimentConfig) -> CliResult<Vec<DichotomyRow>> {
    cfg.p
        .par_iter()
        .map(|&p| {
            let spec = cfg.spec(p)?;
            let regime = classify_regime(&spec).regime;
            let mut c = cfg.clone();
            c.horizon = None;
            c.grid_r = None;
            let small = match find_global_params(&spec, cfg.r0) {
                Ok(g) => InitialData::Barrier {
                    params: g,
                    fraction: cfg.u0_fraction,
                },
                Err(Error::Infeasible(_)) | Err(Error::Inadmissible { .. }) => InitialData::Bump {
                    amplitude: cfg.u0_amplitude,
                    radius: cfg.u0_radius,
                },
                Err(e) => return Err(e.into()),
            };
            let mut cs = c.clone();
            let small_horizon = match &small {
                InitialData::Barrier { .. } => horizon_for(&c, &small),
                _ => {
                    cs.grid_r = Some(cfg.grid_r.unwrap_or(BUMP_DOMAIN_FACTOR * small.support()?));
                    cfg.horizon.unwrap_or(BUMP_HORIZON)
                }
            };
            let large = InitialData::Barrier {
                params: find_blowup_params_with_horizon(&spec, cfg.sub_horizon)?,
                fraction: 1.0,
            };
            let large_horizon = horizon_for(&c, &large);
            let (s, l) = rayon::join(
                || run_case(&cs, &spec, small, small_horizon),
                || run_case(&c, &spec, large, large_horizon),
            );
            let (s, l) = (s?, l?);
            let scale = s.solution.trajectory[0].sup_norm.max(f64::MIN_POSITIVE);
            Ok(DichotomyRow {
                p,
                regime,
                small_datum: s.data.label(),
                small_status: s.solution.status,
                small_blowup_time: s.solution.blowup_time,
                small_violation: match (&s.data, &s.comparison) {
                    (InitialData::Barrier { .. }, Some(cmp)) => Some(cmp.max_violation / scale),
                    _ => None,
                },
                small_horizon,
                large_status: l.solution.status,
                large_blowup_time: l.solution.blowup_time,
            })
        })
        .collect()
}

/// Signed margin of one chaining inequality (positive when it holds).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMargin {
    pub label: &'static str,
    pub margin: f64,
    pub at: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub spec: ProblemSpec,
    pub chain: ChainParams,
    pub conditions: ConditionReport,
    pub links: Vec<LinkMargin>,
    pub solution: RadialSolution,
    /// `t1 + T`.
    pub window: f64,
}

impl ChainReport {
    pub fn blew_up_in_window(&self) -> bool {
        self.solution.status == RunStatus::BlewUp
            && self.solution.blowup_time.is_some_and(|s| s <= self.window)
    }

    /// `LinkViolated` naming the first failed link, or the missing blow-up.
    pub fn verify(&self) -> pme_core::Result<()> {
        if let Some(l) = self.links.iter().find(|l| !(l.margin > 0.0)) {
            return Err(Error::LinkViolated(format!(
                "{} (margin {:e} at r = {}, t = {})",
                l.label, l.margin, l.at.0, l.at.1
            )));
        }
        if !self.blew_up_in_window() {
            return Err(Error::LinkViolated(format!(
                "no blow-up by t1 + T = {:e} (status {})",
                self.window,
                self.solution.status.as_str()
            )));
        }
        Ok(())
    }
}

/// Default length of the densely sampled first leg of the chaining run.
pub const CHAIN_FIRST_LEG: f64 = 100.0;

/// Minimum of `f` over the positive part of the support `[0, r_max]`.
fn min_on(r_max: f64, n: usize, f: impl Fn(f64) -> CliResult<f64>) -> CliResult<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..n {
        let r = r_max * (k as f64 + 0.5) / n as f64;
        let v = f(r)?;
        if v < best.0 {
            best = (v, r);
        }
    }
    Ok(best)
}

/// Build the reaction-free subsolution below a bump datum, check the three
/// chaining inequalities, and run the datum to blow-up.
pub fn run_chain(cfg: &ExperimentConfig) -> CliResult<ChainReport> {
    let spec = cfg.spec(cfg.p0())?;
    let data = initial_data(cfg, &spec)?;
    let u_support = data.support()?;
    if !(u_support > 0.0) || !(data.eval(0.0) > 0.0) {
        return Err(Error::InvalidInitialData("u0 must not vanish identically".into()).into());
    }
    let r0 = 0.5 * u_support;
    let floor = min_on(r0, 512, |r| Ok(data.eval(r)))?.0.min(data.eval(r0));
    let sub = find_blowup_params_with_horizon(&spec, cfg.sub_horizon)?;
    let chain = find_chain_params(&spec, floor, r0, &sub, None)?;
    let conditions = check_chain_conditions(&chain, &spec);
    let z = &chain.barrier;
    let w = &chain.sub;

    let mut links = Vec::new();
    let zr = z.support_radius(0.0)?;
    let (m1, r1) = min_on(zr, 4000, |r| Ok(data.eval(r) - z.eval(r, 0.0)?))?;
    links.push(LinkMargin {
        label: "z(.,0) <= u0",
        margin: m1,
        at: (r1, 0.0),
    });
    let wr = w.support_radius(0.0)?;
    let (m2, r2) = min_on(wr, 4000, |r| Ok(z.eval(r, chain.t1)? - w.eval(r, 0.0)?))?;
    links.push(LinkMargin {
        label: "z(.,t1) >= w(.,0)",
        margin: m2,
        at: (r2, chain.t1),
    });

    // A first leg up to `min(t1, horizon)` with dense samples, then, if the
    // datum has not blown up, a second leg to the end of the window.
    let window = chain.t1 + chain.t_sub();
    let first = cfg.horizon.unwrap_or(CHAIN_FIRST_LEG).min(chain.t1);
    let m_blow = m_blow_for(cfg, &data);
    let r_max = radius_for(cfg, &data, first, m_blow)?;
    let grid = RadialGrid::new(spec.n, r_max, cfg.grid_n)?;
    let u0 = grid.sample(|r| data.eval(r));
    let solver = pme_core::solver::Solver::new(&spec, grid, solver_config(cfg, m_blow));
    let mut sol = solver.evolve(&u0, first)?;
    if sol.status == RunStatus::Completed && window > first {
        let later = solver.evolve(&sol.final_profile().to_vec(), window - first)?;
        sol.append(later);
    }
    let mut m3 = (f64::INFINITY, (f64::NAN, f64::NAN));
    for (&t, prof) in sol.times.iter().zip(&sol.profiles) {
        if t > chain.t1 {
            break;
        }
        for (&r, &u) in sol.grid.centers.iter().zip(prof) {
            let zv = z.eval(r, t)?;
            if zv > 0.0 && u - zv < m3.0 {
                m3 = (u - zv, (r, t));
            }
        }
    }
    links.push(LinkMargin {
        label: "u(.,t) >= z(.,t)",
        margin: m3.0,
        at: m3.1,
    });
    Ok(ChainReport {
        spec,
        chain,
        conditions,
        links,
        solution: sol,
        window,
    })
}

/// Which parameter system `params` solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamsKind {
    Global,
    Blowup,
    Chain,
}

/// Chain construction below the configured bump datum.
fn chain_for_bump(cfg: &ExperimentConfig, spec: &ProblemSpec) -> CliResult<ChainParams> {
    let sub = find_blowup_params_with_horizon(spec, cfg.sub_horizon)?;
    let data = InitialData::Bump {
        amplitude: cfg.u0_amplitude,
        radius: cfg.u0_radius,
    };
    let r0 = 0.5 * cfg.u0_radius;
    Ok(find_chain_params(spec, data.eval(r0), r0, &sub, None)?)
}

/// Parameter set of one system for the first exponent, with its condition report.
pub fn run_params(
    cfg: &ExperimentConfig,
    kind: ParamsKind,
) -> CliResult<(BarrierParams, ConditionReport)> {
    let spec = cfg.spec(cfg.p0())?;
    Ok(match kind {
        ParamsKind::Global => {
            let g = find_global_params(&spec, cfg.r0)?;
            let rep = check_global_conditions(&g, &spec, cfg.r0);
            (g, rep)
        }
        ParamsKind::Blowup => {
            let s = find_blowup_params_with_horizon(&spec, cfg.sub_horizon)?;
            let rep = check_blowup_conditions(&s, &spec);
            (s, rep)
        }
        ParamsKind::Chain => {
            let ch = chain_for_bump(cfg, &spec)?;
            let rep = check_chain_conditions(&ch, &spec);
            (ch.barrier, rep)
        }
    })
}

/// Barrier of the configured family.
pub fn barrier_for(cfg: &ExperimentConfig) -> CliResult<BarrierParams> {
    let kind = match cfg.family {
        Family::Super => ParamsKind::Global,
        Family::Sub => ParamsKind::Blowup,
        Family::Chain => ParamsKind::Chain,
    };
    Ok(run_params(cfg, kind)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSummary {
    pub family: Family,
    pub params: BarrierParams,
    /// Minimum (Super) or maximum (Sub, Chain) relative residual.
    pub extreme: f64,
    pub worst: (f64, f64),
    pub field: ResidualField,
    pub gluing: ConditionReport,
    pub phi: ConditionReport,
}

impl ResidualSummary {
    pub fn passes(&self) -> bool {
        let sign_ok = match self.family {
            Family::Super => self.extreme >= -pme_core::residual::TOL_REL,
            _ => self.extreme <= pme_core::residual::TOL_REL,
        };
        sign_ok && self.gluing.all_satisfied && self.phi.all_satisfied
    }
}

pub fn run_residual(cfg: &ExperimentConfig) -> CliResult<ResidualSummary> {
    let spec = cfg.spec(cfg.p0())?;
    let (params, field, extreme) = match cfg.family {
        Family::Super => {
            let g = find_global_params(&spec, cfg.r0)?;
            let grid = ResidualGrid::for_barrier(&g, cfg.residual_nr, cfg.residual_nt)?;
            let (f, v) = residual_super(&g, &spec, &grid)?;
            (g, f, v)
        }
        Family::Sub => {
            let s = find_blowup_params_with_horizon(&spec, cfg.sub_horizon)?;
            let grid = ResidualGrid::for_barrier(&s, cfg.residual_nr, cfg.residual_nt)?;
            let (f, v) = residual_sub(&s, &spec, &grid)?;
            (s, f, v)
        }
        Family::Chain => {
            let ch = chain_for_bump(cfg, &spec)?;
            let grid = ResidualGrid::for_barrier(&ch.barrier, cfg.residual_nr, cfg.residual_nt)?;
            let (f, v) = residual_chain(&ch, &spec, &grid)?;
            (ch.barrier, f, v)
        }
    };
    let worst = match cfg.family {
        Family::Super => field.min_relative().1,
        _ => field.max_relative().1,
    };
    let probe = default_time_probe(&params, 50);
    let gluing = verify_gluing(&params, &probe)?;
    let phi = phi_endpoint_check(&params, &probe)?;
    Ok(ResidualSummary {
        family: cfg.family,
        params,
        extreme,
        worst,
        field,
        gluing,
        phi,
    })
}

/// Worst closed-form vs finite-difference discrepancy over random interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FdCheck {
    pub family: Family,
    pub nodes: usize,
    /// `|exact - fd| / scale`, where `scale` is the sum of the absolute terms.
    pub max_rel_error: f64,
    pub worst: (f64, f64),
}

/// Nodes stay `2%` away from the gluing radius and `5%` inside the free boundary,
/// where the barrier is smooth enough for the difference stencil.
pub fn fd_check(
    params: &BarrierParams,
    spec: &ProblemSpec,
    nodes: usize,
    seed: u64,
) -> CliResult<FdCheck> {
    use pme_core::residual::{fd_residual, residual_at};
    use pme_core::Side;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let t_max = match params.family {
        Family::Sub => 0.5 * params.t_offset,
        _ => 10.0 * params.t_offset,
    };
    let mut worst = (0.0, (f64::NAN, f64::NAN));
    let mut done = 0;
    let mut tries = 0;
    while done < nodes {
        tries += 1;
        if tries > 1000 * nodes {
            return Err(Error::EmptyProbe.into());
        }
        let t = rng.gen_range(0.02..1.0) * t_max;
        let rs = params.support_radius(t)?;
        let r = rng.gen_range(0.05..0.95) * rs;
        if (r - 1.0).abs() < 0.02 {
            continue;
        }
        let side = Side::of(r);
        let exact = residual_at(params, &spec.density, r, side, t)?;
        if exact.region == pme_core::Region::Outside || !(exact.scale > 0.0) {
            continue;
        }
        let fd = fd_residual(params, &spec.density, r, side, t)?;
        let e = (exact.value - fd).abs() / exact.scale;
        if e > worst.0 {
            worst = (e, (r, t));
        }
        done += 1;
    }
    Ok(FdCheck {
        family: params.family,
        nodes,
        max_rel_error: worst.0,
        worst: worst.1,
    })
}
