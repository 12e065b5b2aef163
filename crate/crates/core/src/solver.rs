//! Radial finite-volume solver for `rho u_t = Laplace(u^m) + rho u^p` on a
//! ball `B_R` with zero Dirichlet data, explicit in time.
//!
//! Cells `[i dr, (i+1) dr]` carry volumes `((i+1)^N - i^N) dr^N / N` and
//! faces carry areas `r^{N-1}` (the common factor `|S^{N-1}|` is dropped).
//! The flux through `r = 0` vanishes; the outer face sees `u = 0` at distance
//! `dr/2`. Under the step bound of [`Solver::stable_dt`] the update is
//! monotone in every cell value, hence nonnegativity and discrete comparison.

use rayon::prelude::*;

use crate::barriers::{BarrierParams, Family};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::exponents::ProblemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n_dim: u32,
    pub r_max: f64,
    pub dr: f64,
    pub centers: Vec<f64>,
    pub faces: Vec<f64>,
    pub volumes: Vec<f64>,
    pub areas: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n_dim: u32, r_max: f64, cells: usize) -> Result<Self> {
        if !(r_max > 0.0) || cells == 0 || n_dim < 1 {
            return Err(Error::OutOfRange(format!(
                "grid needs R > 0 and n > 0, got R = {r_max}, n = {cells}"
            )));
        }
        let dr = r_max / cells as f64;
        let nf = n_dim as f64;
        let faces: Vec<f64> = (0..=cells).map(|i| i as f64 * dr).collect();
        let centers = (0..cells).map(|i| (i as f64 + 0.5) * dr).collect();
        let volumes = (0..cells)
            .map(|i| (faces[i + 1].powf(nf) - faces[i].powf(nf)) / nf)
            .collect();
        let areas = faces.iter().map(|r| r.powf(nf - 1.0)).collect();
        Ok(Self {
            n_dim,
            r_max,
            dr,
            centers,
            faces,
            volumes,
            areas,
        })
    }

    /// Grid with spacing `dr` on `[0, r_max]`.
    pub fn with_spacing(n_dim: u32, r_max: f64, dr: f64) -> Result<Self> {
        let cells = (r_max / dr).round().max(1.0) as usize;
        Self::new(n_dim, cells as f64 * dr, cells)
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    /// Cell values of a radial profile sampled at the centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.centers.iter().map(|&r| f(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub c_cfl: f64,
    pub c_rk: f64,
    /// Added to both step-bound denominators.
    pub floor: f64,
    pub dt_min: f64,
    /// Blow-up threshold; defaults to `1e6 max(1, |u0|_inf)`.
    pub m_blow: Option<f64>,
    /// Number of equispaced output samples over the horizon.
    pub samples: usize,
    /// Include the source term `u^p`.
    pub reaction: bool,
    /// Append a trajectory row after every step, not only at samples.
    pub record_steps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c_cfl: 0.4,
            c_rk: 0.1,
            floor: 1e-30,
            dt_min: 1e-12,
            m_blow: None,
            samples: 50,
            reaction: true,
            record_steps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    BlewUp,
    StepFloor,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "Completed",
            RunStatus::BlewUp => "BlewUp",
            RunStatus::StepFloor => "StepFloor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    BlowUp,
    SupportRadius,
    MassRecord,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BlowUp => "BlowUp",
            EventKind::SupportRadius => "SupportRadius",
            EventKind::MassRecord => "MassRecord",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub sup_norm: f64,
    pub weighted_mass: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub grid: RadialGrid,
    pub times: Vec<f64>,
    /// Cell values at each sample time.
    pub profiles: Vec<Vec<f64>>,
    pub trajectory: Vec<TrajectoryRow>,
    pub events: Vec<Event>,
    pub status: RunStatus,
    /// Extrapolated blow-up time when `status == BlewUp`.
    pub blowup_time: Option<f64>,
    pub final_time: f64,
    pub steps: usize,
    /// The support entered the outer 10% of the cells at some sample.
    pub boundary_touched: bool,
}

impl RadialSolution {
    pub fn final_profile(&self) -> &[f64] {
        self.profiles.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Append a run started from this run's final profile, shifting its times
    /// by `final_time`. The duplicated initial sample of `later` is dropped.
    pub fn append(&mut self, later: RadialSolution) {
        let t0 = self.final_time;
        let skip = usize::from(!later.times.is_empty());
        self.times.extend(later.times.iter().skip(skip).map(|t| t + t0));
        self.profiles.extend(later.profiles.into_iter().skip(skip));
        self.trajectory
            .extend(later.trajectory.into_iter().skip(skip).map(|mut r| {
                r.t += t0;
                r
            }));
        self.events.extend(later.events.into_iter().filter(|e| e.t > 0.0).map(|mut e| {
            e.t += t0;
            if e.kind == EventKind::BlowUp {
                e.value += t0;
            }
            e
        }));
        self.status = later.status;
        self.blowup_time = later.blowup_time.map(|s| s + t0);
        self.final_time = t0 + later.final_time;
        self.steps += later.steps;
        self.boundary_touched |= later.boundary_touched;
    }
}

/// One equation on one grid: `rho`, geometric factors and the step bound.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: RadialGrid,
    pub m: f64,
    pub p: f64,
    pub cfg: SolverConfig,
    rho: Vec<f64>,
    inv_mass: Vec<f64>,
    conductance: Vec<f64>,
    rho_min: f64,
}

impl Solver {
    pub fn new(spec: &ProblemSpec, grid: RadialGrid, cfg: SolverConfig) -> Self {
        Self::with_density(spec.m, spec.p, &spec.density, grid, cfg)
    }

    pub fn with_density(
        m: f64,
        p: f64,
        density: &DensityModel,
        grid: RadialGrid,
        cfg: SolverConfig,
    ) -> Self {
        let n = grid.cells();
        let rho: Vec<f64> = grid.centers.iter().map(|&r| density.eval(r)).collect();
        let inv_mass = (0..n).map(|i| 1.0 / (rho[i] * grid.volumes[i])).collect();
        let mut conductance: Vec<f64> = grid.areas.iter().map(|a| a / grid.dr).collect();
        conductance[0] = 0.0;
        conductance[n] = grid.areas[n] / (0.5 * grid.dr);
        let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            grid,
            m,
            p,
            cfg,
            rho,
            inv_mass,
            conductance,
            rho_min,
        }
    }

    /// Diffusion and reaction step bounds.
    pub fn dt_bounds(&self, u: &[f64]) -> (f64, f64) {
        let umax = sup_norm(u);
        let nf = self.grid.n_dim as f64;
        let dr = self.grid.dr;
        let diff = self.cfg.c_cfl * self.rho_min * dr * dr
            / (2.0 * nf * self.m * umax.powf(self.m - 1.0) + self.cfg.floor);
        let react = if self.cfg.reaction {
            self.cfg.c_rk / (self.p * umax.powf(self.p - 1.0) + self.cfg.floor)
        } else {
            f64::INFINITY
        };
        (diff, react)
    }

    pub fn stable_dt(&self, u: &[f64]) -> f64 {
        let (d, r) = self.dt_bounds(u);
        d.min(r)
    }

    /// One forward-Euler step in place.
    pub fn step(&self, u: &mut [f64], dt: f64) -> Result<()> {
        let bound = self.stable_dt(u);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::StabilityViolation { dt, bound });
        }
        let n = u.len();
        let m = self.m;
        let w: Vec<f64> = u.iter().map(|&x| x.powf(m)).collect();
        let g = &self.conductance;
        let p = self.p;
        let reaction = self.cfg.reaction;
        u.par_iter_mut()
            .with_min_len(4096)
            .enumerate()
            .for_each(|(i, ui)| {
                let left = if i == 0 { 0.0 } else { g[i] * (w[i] - w[i - 1]) };
                let wr = if i + 1 < n { w[i + 1] } else { 0.0 };
                let right = g[i + 1] * (wr - w[i]);
                let mut v = *ui + dt * self.inv_mass[i] * (right - left);
                if reaction {
                    v += dt * ui.powf(p);
                }
                // round-off only: the update is monotone under the step bound
                *ui = v.max(0.0);
            });
        Ok(())
    }

    /// `sum rho_i V_i u_i`.
    pub fn weighted_mass(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.rho)
            .zip(&self.grid.volumes)
            .map(|((u, r), v)| u * r * v)
            .sum()
    }

    /// Outer face of the last positive cell.
    pub fn support_radius(&self, u: &[f64]) -> f64 {
        u.iter()
            .rposition(|&x| x > 0.0)
            .map_or(0.0, |i| self.grid.faces[i + 1])
    }

    fn row(&self, t: f64, u: &[f64]) -> TrajectoryRow {
        TrajectoryRow {
            t,
            sup_norm: sup_norm(u),
            weighted_mass: self.weighted_mass(u),
            support_radius: self.support_radius(u),
        }
    }

    /// Integrate from `u0` up to `horizon`, to the blow-up threshold, or to the step floor.
    pub fn evolve(&self, u0: &[f64], horizon: f64) -> Result<RadialSolution> {
        if u0.len() != self.grid.cells() {
            return Err(Error::InvalidInitialData(format!(
                "{} values for {} cells",
                u0.len(),
                self.grid.cells()
            )));
        }
        if let Some(i) = u0.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInitialData(format!(
                "u0 = {} at r = {}",
                u0[i], self.grid.centers[i]
            )));
        }
        let m_blow = self
            .cfg
            .m_blow
            .unwrap_or(1e6 * sup_norm(u0).max(1.0));
        let samples = self.cfg.samples.max(1);
        let mut u = u0.to_vec();
        let mut t = 0.0;
        let mut next = 1usize;
        let mut sol = RadialSolution {
            grid: self.grid.clone(),
            times: Vec::new(),
            profiles: Vec::new(),
            trajectory: Vec::new(),
            events: Vec::new(),
            status: RunStatus::Completed,
            blowup_time: None,
            final_time: 0.0,
            steps: 0,
            boundary_touched: false,
        };
        self.record(&mut sol, t, &u);
        // points (t, |u|^{-(p-1)}) kept whenever the sup-norm grows by 25%
        let mut hist: Vec<(f64, f64)> = Vec::new();
        let mut last_sup = sup_norm(&u);
        let mut sampled = true;
        loop {
            let sup = sup_norm(&u);
            if sup >= m_blow {
                sol.status = RunStatus::BlewUp;
                break;
            }
            let (dd, dreact) = self.dt_bounds(&u);
            let dt_stable = dd.min(dreact);
            if dt_stable < self.cfg.dt_min {
                sol.status = if self.cfg.reaction && dreact <= dd {
                    RunStatus::BlewUp
                } else {
                    RunStatus::StepFloor
                };
                break;
            }
            let target = horizon * next as f64 / samples as f64;
            let dt = dt_stable.min(target - t);
            self.step(&mut u, dt)?;
            sol.steps += 1;
            t = if dt == target - t { target } else { t + dt };
            sampled = false;
            let sup = sup_norm(&u);
            if self.cfg.reaction && sup >= 1.25 * last_sup {
                hist.push((t, sup.powf(-(self.p - 1.0))));
                last_sup = sup;
            }
            if t >= target {
                self.record(&mut sol, t, &u);
                sampled = true;
                next += 1;
                if next > samples {
                    break;
                }
            } else if self.cfg.record_steps {
                sol.trajectory.push(self.row(t, &u));
            }
        }
        if !sampled {
            self.record(&mut sol, t, &u);
        }
        sol.final_time = t;
        if sol.status == RunStatus::BlewUp {
            let y = sup_norm(&u).powf(-(self.p - 1.0));
            let est = hist
                .iter()
                .rev()
                .find(|(th, yh)| *th < t && *yh > y)
                .map(|&(th, yh)| t + y * (t - th) / (yh - y));
            sol.blowup_time = Some(est.unwrap_or(t));
            sol.events.push(Event {
                kind: EventKind::BlowUp,
                t,
                value: sol.blowup_time.unwrap_or(t),
            });
        }
        Ok(sol)
    }

    fn record(&self, sol: &mut RadialSolution, t: f64, u: &[f64]) {
        let row = self.row(t, u);
        if row.support_radius > 0.9 * self.grid.r_max {
            sol.boundary_touched = true;
        }
        sol.events.push(Event {
            kind: EventKind::SupportRadius,
            t,
            value: row.support_radius,
        });
        sol.events.push(Event {
            kind: EventKind::MassRecord,
            t,
            value: row.weighted_mass,
        });
        sol.trajectory.push(row);
        sol.times.push(t);
        sol.profiles.push(u.to_vec());
    }
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().copied().fold(0.0, f64::max)
}

/// Solve on `grid` from `u0` up to `horizon`.
pub fn evolve(
    spec: &ProblemSpec,
    grid: RadialGrid,
    u0: &[f64],
    horizon: f64,
    cfg: SolverConfig,
) -> Result<RadialSolution> {
    Solver::new(spec, grid, cfg).evolve(u0, horizon)
}

/// Blow-up time `1/((p-1) |u0|^{p-1})` of the spatially constant supersolution.
pub fn ode_blowup_time(norm0: f64, p: f64) -> f64 {
    1.0 / ((p - 1.0) * norm0.powf(p - 1.0))
}

/// `|u0| / [1 - (p-1) t |u0|^{p-1}]^{1/(p-1)}`.
pub fn ode_supersolution(t: f64, norm0: f64, p: f64) -> Result<f64> {
    let tau = ode_blowup_time(norm0, p);
    if t >= tau {
        return Err(Error::DomainError(format!("t = {t} >= tau0 = {tau}")));
    }
    Ok(norm0 / (1.0 - (p - 1.0) * t * norm0.powf(p - 1.0)).powf(1.0 / (p - 1.0)))
}

/// Source-type self-similar solution of `u_t = Laplace(u^m)` in `R^N`:
/// `t^{-k} [c0 - kappa r^2 t^{-2k/N}]_+^{1/(m-1)}` with
/// `k = N/(N(m-1)+2)`, `kappa = k (m-1)/(2 m N)`.
pub fn barenblatt(r: f64, t: f64, m: f64, n_dim: u32, c0: f64) -> f64 {
    let nf = n_dim as f64;
    let k = nf / (nf * (m - 1.0) + 2.0);
    let kappa = k * (m - 1.0) / (2.0 * m * nf);
    let f = c0 - kappa * r * r * t.powf(-2.0 * k / nf);
    t.powf(-k) * f.max(0.0).powf(1.0 / (m - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub radii: Vec<f64>,
    pub solutions: Vec<RadialSolution>,
    /// For each consecutive pair, `max (u_{R_j} - u_{R_{j+1}})` over common cells and samples.
    pub max_violation: Vec<f64>,
    /// `max |u_{R_last} - u_{R_prev}|` on common cells at the final sample.
    pub cauchy: f64,
}

/// Dirichlet problems on balls of increasing radius with a common spacing and
/// a common step sequence; the discrete solutions should increase with `R`.
pub fn minimal_solution_sweep(
    spec: &ProblemSpec,
    u0: impl Fn(f64) -> f64,
    radii: &[f64],
    dr: f64,
    horizon: f64,
    cfg: SolverConfig,
) -> Result<SweepReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::OutOfRange("radii must be increasing and nonempty".into()));
    }
    let solvers: Vec<Solver> = radii
        .iter()
        .map(|&r| Ok(Solver::new(spec, RadialGrid::with_spacing(spec.n, r, dr)?, cfg)))
        .collect::<Result<_>>()?;
    let mut states: Vec<Vec<f64>> = solvers.iter().map(|s| s.grid.sample(&u0)).collect();
    if let Some(bad) = states.iter().flatten().find(|&&x| !(x >= 0.0)) {
        return Err(Error::InvalidInitialData(format!("u0 = {bad}")));
    }
    let mut sols: Vec<RadialSolution> = solvers
        .iter()
        .zip(&states)
        .map(|(s, u)| {
            let mut sol = RadialSolution {
                grid: s.grid.clone(),
                times: Vec::new(),
                profiles: Vec::new(),
                trajectory: Vec::new(),
                events: Vec::new(),
                status: RunStatus::Completed,
                blowup_time: None,
                final_time: 0.0,
                steps: 0,
                boundary_touched: false,
            };
            s.record(&mut sol, 0.0, u);
            sol
        })
        .collect();
    let samples = cfg.samples.max(1);
    let m_blow = cfg
        .m_blow
        .unwrap_or(1e6 * states.iter().map(|u| sup_norm(u)).fold(1.0, f64::max));
    let mut t = 0.0;
    let mut next = 1usize;
    'outer: while next <= samples {
        let dt_stable = solvers
            .iter()
            .zip(&states)
            .map(|(s, u)| s.stable_dt(u))
            .fold(f64::INFINITY, f64::min);
        if dt_stable < cfg.dt_min {
            for s in &mut sols {
                s.status = RunStatus::StepFloor;
            }
            break;
        }
        let target = horizon * next as f64 / samples as f64;
        let dt = dt_stable.min(target - t);
        solvers
            .par_iter()
            .zip(states.par_iter_mut())
            .try_for_each(|(s, u)| s.step(u, dt))?;
        t = if dt == target - t { target } else { t + dt };
        for s in &mut sols {
            s.steps += 1;
        }
        if t >= target {
            for ((s, u), sol) in solvers.iter().zip(&states).zip(&mut sols) {
                s.record(sol, t, u);
            }
            next += 1;
        }
        for (u, sol) in states.iter().zip(&mut sols) {
            if sup_norm(u) >= m_blow {
                sol.status = RunStatus::BlewUp;
                break 'outer;
            }
        }
    }
    for sol in &mut sols {
        sol.final_time = t;
    }
    let common = sols[0].grid.cells();
    let mut max_violation = Vec::new();
    for j in 0..sols.len().saturating_sub(1) {
        let (a, b) = (&sols[j], &sols[j + 1]);
        let mut worst = f64::NEG_INFINITY;
        for (pa, pb) in a.profiles.iter().zip(&b.profiles) {
            for i in 0..common {
                worst = worst.max(pa[i] - pb[i]);
            }
        }
        max_violation.push(worst);
    }
    let cauchy = if sols.len() >= 2 {
        let (a, b) = (&sols[sols.len() - 2], &sols[sols.len() - 1]);
        let n = a.grid.cells();
        a.final_profile()
            .iter()
            .zip(&b.final_profile()[..n])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(SweepReport {
        radii: radii.to_vec(),
        solutions: sols,
        max_violation,
        cauchy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The numeric solution should lie below the barrier.
    Below,
    /// The numeric solution should lie above the barrier.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// `max (u - w)` for `Below`, `max (w - u)` for `Above`.
    pub max_violation: f64,
    pub at: (f64, f64),
    pub pass: bool,
}

/// Signed ordering violation between a numeric solution and a barrier at the
/// cell centers of every sample (the blow-up barrier only before its horizon).
pub fn comparison_test(
    sol: &RadialSolution,
    barrier: &BarrierParams,
    direction: Direction,
    tol: f64,
) -> Result<ComparisonReport> {
    let mut worst = (f64::NEG_INFINITY, (f64::NAN, f64::NAN));
    for (k, (&t, prof)) in sol.times.iter().zip(&sol.profiles).enumerate() {
        if barrier.family == Family::Sub && t >= barrier.t_offset {
            continue;
        }
        let mut local = f64::NEG_INFINITY;
        let mut at = f64::NAN;
        for (&r, &u) in sol.grid.centers.iter().zip(prof) {
            let w = barrier.eval(r, t)?;
            let v = match direction {
                Direction::Below => u - w,
                Direction::Above => w - u,
            };
            if v > local {
                local = v;
                at = r;
            }
        }
        if k == 0 && local > tol {
            return Err(Error::OrderingViolatedAtStart(local));
        }
        if local > worst.0 {
            worst = (local, (at, t));
        }
    }
    Ok(ComparisonReport {
        max_violation: worst.0,
        at: worst.1,
        pass: worst.0 <= tol,
    })
}
