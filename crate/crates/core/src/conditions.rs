//! Parameter systems for the barrier families: checkers that evaluate every
//! inequality with a signed margin, and constructive searches that produce
//! admissible parameters.
//!
//! Free choices are pinned for reproducibility: interval midpoints for
//! two-sided constraints, a factor 2 for one-sided bounds, and doubling
//! searches (with the checker as stopping rule) for "large enough" scalars.

use std::fmt;

use crate::barriers::{k_constant, shape_r, BarrierParams, Family};
use crate::error::{Error, Result};
use crate::exponents::{self, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Supersolution parameters for global existence.
    Global,
    /// Subsolution parameters, `p > m`.
    BlowupA,
    /// Subsolution parameters, `p < m`.
    BlowupB,
    /// Subsolution parameters, `p = m`.
    BlowupC,
    /// Reaction-free subsolution and its links to the data and the blow-up barrier.
    Chain,
    DensityBounds,
    Gluing,
    PhiEndpoints,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::Global => "Global",
            SystemKind::BlowupA => "BlowupA",
            SystemKind::BlowupB => "BlowupB",
            SystemKind::BlowupC => "BlowupC",
            SystemKind::Chain => "Chain",
            SystemKind::DensityBounds => "DensityBounds",
            SystemKind::Gluing => "Gluing",
            SystemKind::PhiEndpoints => "PhiEndpoints",
        }
    }
}

/// One inequality: `lhs (op) rhs`, with `margin` the signed distance to the
/// boundary (positive inside the admissible side).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
}

impl ConditionEntry {
    /// `lhs <= rhs`.
    pub fn le(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            label: label.into(),
            lhs,
            rhs,
            satisfied: margin >= 0.0,
            margin,
        }
    }

    /// `lhs >= rhs`.
    pub fn ge(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            label: label.into(),
            lhs,
            rhs,
            satisfied: margin >= 0.0,
            margin,
        }
    }

    /// `lhs < rhs`.
    pub fn lt(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let mut e = Self::le(label, lhs, rhs);
        e.satisfied = e.margin > 0.0;
        e
    }

    /// `lhs > rhs`.
    pub fn gt(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let mut e = Self::ge(label, lhs, rhs);
        e.satisfied = e.margin > 0.0;
        e
    }

    /// `lhs <= rhs` accepted up to an absolute slack.
    pub fn le_slack(label: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let mut e = Self::le(label, lhs, rhs);
        e.satisfied = e.margin >= -slack;
        e
    }

    /// `lhs >= rhs` accepted up to an absolute slack.
    pub fn ge_slack(label: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let mut e = Self::ge(label, lhs, rhs);
        e.satisfied = e.margin >= -slack;
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub system: SystemKind,
    pub entries: Vec<ConditionEntry>,
    pub all_satisfied: bool,
}

impl ConditionReport {
    pub fn new(system: SystemKind, entries: Vec<ConditionEntry>) -> Self {
        let all_satisfied = entries.iter().all(|e| e.satisfied);
        Self {
            system,
            entries,
            all_satisfied,
        }
    }

    pub fn failures(&self) -> Vec<&ConditionEntry> {
        self.entries.iter().filter(|e| !e.satisfied).collect()
    }

    pub fn min_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn entry(&self, label: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    fn failure_summary(&self) -> String {
        let labels: Vec<&str> = self.failures().iter().map(|e| e.label.as_str()).collect();
        format!("{} fails: {}", self.system.as_str(), labels.join(", "))
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system,label,lhs,rhs,satisfied,margin")?;
        for e in &self.entries {
            writeln!(
                f,
                "{},{},{:e},{:e},{},{:e}",
                self.system.as_str(),
                e.label,
                e.lhs,
                e.rhs,
                e.satisfied,
                e.margin
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Global existence (supersolution) system
// ---------------------------------------------------------------------------

/// Supersolution parameters together with the choices made along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConstruction {
    pub params: BarrierParams,
    /// Open interval of admissible `alpha`.
    pub alpha_interval: (f64, f64),
    /// Interval of admissible `omega = C^{m-1}/a` at the chosen `alpha`.
    pub omega_interval: (f64, f64),
    /// Margin used to decouple `T` from `C`.
    pub eps: f64,
}

fn mm(m: f64) -> f64 {
    m / (m - 1.0)
}

/// `k1 (N-2+bm/(m-1)) - k2 b/(m-1)`.
fn global_bracket(m: f64, n: f64, b: f64, k1: f64, k2: f64) -> f64 {
    k1 * (n - 2.0 + b * mm(m)) - k2 * b / (m - 1.0)
}

pub fn check_global_conditions(
    params: &BarrierParams,
    spec: &ProblemSpec,
    r0: f64,
) -> ConditionReport {
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);
    let (al, be, c, a, t) = (
        params.alpha,
        params.beta,
        params.c,
        params.a,
        params.t_offset,
    );
    let w = params.omega();
    let cp = c.powf(p - 1.0);
    let mut e = vec![
        ConditionEntry::ge(
            "family_super",
            (params.family == Family::Super) as u8 as f64,
            1.0,
        ),
        ConditionEntry::gt("alpha_lower", al, 1.0 / (p - 1.0)),
        ConditionEntry::lt("alpha_upper", al, 1.0 / (m - 1.0)),
        ConditionEntry::le("beta_relation", (be - (1.0 - al * (m - 1.0))).abs(), 1e-12),
        ConditionEntry::ge("beta_lower", be, b * b * w * k2 * mm(m)),
        ConditionEntry::ge(
            "outer_reaction",
            -al + b * w * mm(m) * global_bracket(m, n, b, k1, k2),
            cp,
        ),
        ConditionEntry::ge("beta_lower_timed", be * t.powf(be), b * b * w / a * k2 * mm(m)),
        ConditionEntry::gt("support_covers_data", t.powf(be), r0 / a),
        ConditionEntry::ge(
            "inner_reaction",
            -al + b * w * mm(m) * (k1 * n - b * t.powf(-be) / ((m - 1.0) * a) * k2),
            cp,
        ),
    ];
    // The reduction of the time-dependent inequalities to the outer and inner reaction bounds
    // bounds (T+t)^{-alpha p} by (T+t)^{-alpha-1}, which needs T + t >= 1.
    e.push(ConditionEntry::ge("time_offset_unit", t, 1.0));
    ConditionReport::new(SystemKind::Global, e)
}

/// Construct supersolution parameters for `p > p_bar`, following the order
/// alpha, omega, C, T.
pub fn find_global_construction(spec: &ProblemSpec, r0: f64) -> Result<GlobalConstruction> {
    let cls = exponents::classify_regime(spec);
    let pb = match cls.p_bar {
        Some(pb) => pb,
        None => {
            return Err(Error::Infeasible(format!(
                "admissibility fails (margin {})",
                cls.admissibility_margin
            )))
        }
    };
    if cls.regime != exponents::Regime::GlobalSmallData {
        return Err(Error::Infeasible(format!(
            "p = {} does not exceed p_bar = {pb}",
            spec.p
        )));
    }
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);
    let bracket = global_bracket(m, n, b, k1, k2);

    let lo = 1.0 / (p - 1.0);
    let hi = [
        bracket / (k1 * (m * (n - 2.0 + b) - (n - 2.0))),
        k1 * n / (b * k2 + (m - 1.0) * k1 * n),
        1.0 / (m - 1.0),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Infeasible(format!(
            "alpha interval ({lo}, {hi}) is empty"
        )));
    }
    let alpha = 0.5 * (lo + hi);
    let beta = 1.0 - alpha * (m - 1.0);

    let w_hi = beta / (b * b * k2 * mm(m));
    let eps_max = k1 * n - alpha * b * k2 / beta;
    if !(eps_max > 0.0) || !(bracket > 0.0) {
        return Err(Error::Infeasible("omega interval is empty".into()));
    }
    let eps = 0.5 * eps_max;
    let w_lo = f64::max(
        alpha / (b * mm(m) * bracket),
        alpha / (b * mm(m) * (k1 * n - eps)),
    );
    if !(w_hi > w_lo) {
        return Err(Error::Infeasible(format!(
            "omega interval ({w_lo}, {w_hi}) is empty"
        )));
    }
    let w = 0.5 * (w_lo + w_hi);

    let lhs4 = -alpha + b * w * mm(m) * bracket;
    let lhs221 = -alpha + b * w * mm(m) * (k1 * n - eps);
    let c = (0.5 * lhs4.min(lhs221)).powf(1.0 / (p - 1.0));
    let a = c.powf(m - 1.0) / w;

    let tb = [
        b * b * w * k2 * mm(m) / (a * beta),
        r0 / a,
        b * k2 / ((k1 * n - eps) * (m - 1.0) * a),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut t = f64::max(1.0, (2.0 * tb).powf(1.0 / beta));

    let mut params = BarrierParams {
        family: Family::Super,
        c,
        a,
        t_offset: t,
        alpha,
        beta,
        m,
        p,
        b,
        k1,
        k2,
        n: spec.n,
    };
    for _ in 0..200 {
        let rep = check_global_conditions(&params, spec, r0);
        if rep.all_satisfied {
            return Ok(GlobalConstruction {
                params,
                alpha_interval: (lo, hi),
                omega_interval: (w_lo, w_hi),
                eps,
            });
        }
        let only_t = rep
            .failures()
            .iter()
            .all(|e| matches!(e.label.as_str(), "beta_lower_timed" | "support_covers_data" | "inner_reaction" | "time_offset_unit"));
        if !only_t {
            return Err(Error::Infeasible(rep.failure_summary()));
        }
        t *= 2.0;
        params.t_offset = t;
    }
    Err(Error::Infeasible("T search did not terminate".into()))
}

pub fn find_global_params(spec: &ProblemSpec, r0: f64) -> Result<BarrierParams> {
    find_global_construction(spec, r0).map(|g| g.params)
}

// ---------------------------------------------------------------------------
// Blow-up (subsolution) system
// ---------------------------------------------------------------------------

/// Whether `p` is treated as equal to `m`.
fn p_equals_m(m: f64, p: f64) -> bool {
    (p - m).abs() <= exponents::BOUNDARY_SLACK * m.max(1.0)
}

pub fn blowup_system(m: f64, p: f64) -> SystemKind {
    if p_equals_m(m, p) {
        SystemKind::BlowupC
    } else if p > m {
        SystemKind::BlowupA
    } else {
        SystemKind::BlowupB
    }
}

/// Scaled outer and inner `sigma` coefficients of the subsolution:
/// `1/(m-1) + omega m/(m-1) b k2 (N-2+bm/(m-1))` and
/// `1/(m-1) + 2 omega m/(m-1) k2 (N+2/(m-1))`.
fn sub_sigmas(m: f64, n: f64, b: f64, k2: f64, w: f64) -> (f64, f64) {
    let s_out = 1.0 / (m - 1.0) + w * mm(m) * b * k2 * (n - 2.0 + b * mm(m));
    let s_in = 1.0 / (m - 1.0) + 2.0 * w * mm(m) * k2 * (n + 2.0 / (m - 1.0));
    (s_out, s_in)
}

fn safe_div(x: f64, y: f64) -> f64 {
    if y > 0.0 {
        x / y
    } else {
        f64::INFINITY
    }
}

pub fn check_blowup_conditions(params: &BarrierParams, spec: &ProblemSpec) -> ConditionReport {
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);
    let (c, a) = (params.c, params.a);
    let w = params.omega();
    let k = k_constant(m, p);
    let (s_out, s_in) = sub_sigmas(m, n, b, k2, w);
    let system = blowup_system(m, p);
    let mut e = vec![
        ConditionEntry::ge(
            "family_sub",
            (params.family == Family::Sub) as u8 as f64,
            1.0,
        ),
        ConditionEntry::le(
            "alpha_relation",
            (params.alpha - 1.0 / (p - 1.0)).abs(),
            1e-12,
        ),
        ConditionEntry::le(
            "beta_relation",
            (params.beta - (m - p) / (p - 1.0)).abs(),
            1e-12,
        ),
    ];
    let expo = (p + m - 2.0) / (p - 1.0);
    match system {
        SystemKind::BlowupA => {
            let cm = c.powf(m - 1.0);
            let cp = c.powf(p - 1.0);
            let tail = (p - m) / (p - 1.0);
            e.push(ConditionEntry::le(
                "outer_phi",
                k * s_out.powf(expo),
                cm / (m - 1.0) * (b * b * k1 * w * mm(m) + tail),
            ));
            e.push(ConditionEntry::le("outer_f0", (m - 1.0) * s_out, (p + m - 2.0) * cp));
            e.push(ConditionEntry::le(
                "inner_phi",
                k * s_in.powf(expo),
                cm / (m - 1.0) * (4.0 * k1 * w * mm(m) + tail),
            ));
            e.push(ConditionEntry::le("inner_f0", (m - 1.0) * s_in, (p + m - 2.0) * cp));
        }
        SystemKind::BlowupB => {
            let tail = (m - p) / (p - 1.0);
            e.push(ConditionEntry::gt(
                "omega_lower",
                w,
                (m - p) * (m - 1.0) / (b * b * (p - 1.0) * m * k1),
            ));
            e.push(ConditionEntry::ge(
                "outer_phi",
                a,
                safe_div(
                    k * s_out.powf(expo),
                    w / (m - 1.0) * (w * mm(m) * k1 * b * b - tail),
                ),
            ));
            e.push(ConditionEntry::ge(
                "inner_phi",
                a,
                safe_div(
                    k * s_in.powf(expo),
                    w / (m - 1.0) * (4.0 * k1 * w * mm(m) - tail),
                ),
            ));
            let lhs10 = (p + m - 2.0) * (a * w).powf((p - 1.0) / (m - 1.0));
            e.push(ConditionEntry::ge("outer_f0", lhs10, (m - 1.0) * s_out));
            e.push(ConditionEntry::ge("inner_f0", lhs10, (m - 1.0) * s_in));
        }
        _ => {
            let d = mm(m) / (m - 1.0);
            e.push(ConditionEntry::ge(
                "outer_phi",
                a,
                k * s_out * s_out / (b * b * k1 * w * w * d),
            ));
            e.push(ConditionEntry::ge(
                "inner_phi",
                a,
                k * s_in * s_in / (4.0 * k1 * w * w * d),
            ));
            e.push(ConditionEntry::ge(
                "outer_f0",
                a,
                (m - 1.0) * s_out / (2.0 * (m - 1.0) * w),
            ));
            e.push(ConditionEntry::ge(
                "inner_f0",
                a,
                (m - 1.0) * s_in / (2.0 * (m - 1.0) * w),
            ));
        }
    }
    ConditionReport::new(system, e)
}

fn sub_params(spec: &ProblemSpec, c: f64, a: f64, horizon: f64) -> BarrierParams {
    let (m, p) = (spec.m, spec.p);
    BarrierParams {
        family: Family::Sub,
        c,
        a,
        t_offset: horizon,
        alpha: 1.0 / (p - 1.0),
        beta: (m - p) / (p - 1.0),
        m,
        p,
        b: spec.b(),
        k1: spec.density.k1,
        k2: spec.density.k2,
        n: spec.n,
    }
}

/// Factor applied to the smallest feasible amplitude when `p > m`, so that
/// the inequalities hold with a margin rather than at equality.
const AMPLITUDE_MARGIN: f64 = 1.1;

/// Subsolution parameters with blow-up horizon `T = 1`.
pub fn find_blowup_params(spec: &ProblemSpec) -> Result<BarrierParams> {
    find_blowup_params_with_horizon(spec, 1.0)
}

/// Subsolution parameters for a given horizon `T` (the conditions do not involve `T`).
pub fn find_blowup_params_with_horizon(spec: &ProblemSpec, horizon: f64) -> Result<BarrierParams> {
    if !(horizon > 0.0) {
        return Err(Error::OutOfRange(format!("horizon {horizon} must be positive")));
    }
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);
    let k = k_constant(m, p);
    let params = match blowup_system(m, p) {
        SystemKind::BlowupA => {
            let w = 1.0;
            let ok = |c: f64| {
                check_blowup_conditions(&sub_params(spec, c, c.powf(m - 1.0) / w, horizon), spec)
                    .all_satisfied
            };
            let mut hi = 1.0;
            let mut guard = 0;
            while !ok(hi) {
                hi *= 2.0;
                guard += 1;
                if guard > 2000 {
                    return Err(Error::Infeasible("amplitude search diverged".into()));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let c = AMPLITUDE_MARGIN * hi;
            sub_params(spec, c, c.powf(m - 1.0) / w, horizon)
        }
        SystemKind::BlowupB => {
            let w = 2.0 * (m - p) * (m - 1.0) / (b * b * (p - 1.0) * m * k1);
            let (s_out, s_in) = sub_sigmas(m, n, b, k2, w);
            let expo = (p + m - 2.0) / (p - 1.0);
            let tail = (m - p) / (p - 1.0);
            let a9 = f64::max(
                k * s_out.powf(expo) / (w / (m - 1.0) * (w * mm(m) * k1 * b * b - tail)),
                k * s_in.powf(expo) / (w / (m - 1.0) * (4.0 * k1 * w * mm(m) - tail)),
            );
            let a10 = ((m - 1.0) * s_out.max(s_in) / (p + m - 2.0)).powf((m - 1.0) / (p - 1.0)) / w;
            let a = 2.0 * a9.max(a10);
            sub_params(spec, (a * w).powf(1.0 / (m - 1.0)), a, horizon)
        }
        _ => {
            let w = 1.0;
            let (s_out, s_in) = sub_sigmas(m, n, b, k2, w);
            let d = mm(m) / (m - 1.0);
            let a = 2.0
                * [
                    k * s_out * s_out / (b * b * k1 * w * w * d),
                    k * s_in * s_in / (4.0 * k1 * w * w * d),
                    s_out / (2.0 * w),
                    s_in / (2.0 * w),
                ]
                .into_iter()
                .fold(0.0, f64::max);
            sub_params(spec, (a * w).powf(1.0 / (m - 1.0)), a, horizon)
        }
    };
    let rep = check_blowup_conditions(&params, spec);
    if rep.all_satisfied {
        Ok(params)
    } else {
        Err(Error::Infeasible(rep.failure_summary()))
    }
}

// ---------------------------------------------------------------------------
// Reaction-free chaining subsolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta0 {
    pub beta0: f64,
    pub alpha0: f64,
    pub beta0_tilde: f64,
    pub alpha0_tilde: f64,
    /// `0 < beta0 < 1` and `0 < beta0_tilde < 1`.
    pub in_unit: bool,
    /// `beta0 < beta0_tilde`.
    pub ordered: bool,
}

pub fn beta0_alpha0(m: f64, n: u32, b: f64, k1: f64, k2: f64, eps0: f64) -> Beta0 {
    let nf = n as f64;
    let beta0 = b * (k1 / k2) / ((m - 1.0) * (nf - 2.0) + b * m);
    let beta0_tilde = (2.0 * k1 / k2 - eps0) / (nf * (m - 1.0) + 2.0);
    Beta0 {
        beta0,
        alpha0: (1.0 - beta0) / (m - 1.0),
        beta0_tilde,
        alpha0_tilde: (1.0 - beta0_tilde) / (m - 1.0),
        in_unit: beta0 > 0.0 && beta0 < 1.0 && beta0_tilde > 0.0 && beta0_tilde < 1.0,
        ordered: beta0 < beta0_tilde,
    }
}

/// Default `eps0`: half the largest value that keeps `beta0 < beta0_tilde`.
/// `None` when no positive value does (e.g. `b = 2`, `k1 = k2`).
pub fn eps0_policy(m: f64, n: u32, b: f64, k1: f64, k2: f64) -> Option<f64> {
    let b0 = beta0_alpha0(m, n, b, k1, k2, 0.0).beta0;
    let top = 2.0 * k1 / k2 - b0 * (n as f64 * (m - 1.0) + 2.0);
    (top > 0.0).then_some(0.5 * top)
}

/// `p < m + beta/alpha` with `alpha = (1-beta)/(m-1)`.
pub fn exponent_gap_holds(m: f64, p: f64, beta_bar: f64) -> bool {
    p < m + beta_bar * (m - 1.0) / (1.0 - beta_bar)
}

/// Reaction-free subsolution `z` with the times that chain it to the blow-up barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    /// `z`: amplitude `C1`, scale `a1`, offset `T1`, exponents `alpha_bar`, `beta_bar`.
    pub barrier: BarrierParams,
    /// Time at which `z` dominates the blow-up barrier at its initial time.
    pub t1: f64,
    /// Subsolution of the full equation, started at `t1`; its horizon is `T`.
    pub sub: BarrierParams,
    pub eps0: f64,
    /// Admissible bound on `q` implied by `eps0` and the data scale.
    pub eps: f64,
    /// Lower bound of the initial datum on the ball of radius `r0`.
    pub floor: f64,
    pub r0: f64,
    pub beta0: Beta0,
    pub omega_interval: (f64, f64),
    /// Amplitude ratio of `z(., t1)` over the blow-up barrier at its start.
    pub lambda: f64,
}

impl ChainParams {
    pub fn c1(&self) -> f64 {
        self.barrier.c
    }
    pub fn a1(&self) -> f64 {
        self.barrier.a
    }
    pub fn t1_offset(&self) -> f64 {
        self.barrier.t_offset
    }
    pub fn beta_bar(&self) -> f64 {
        self.barrier.beta
    }
    pub fn alpha_bar(&self) -> f64 {
        self.barrier.alpha
    }
    pub fn omega1(&self) -> f64 {
        self.barrier.omega()
    }
    /// Horizon `T` of the blow-up barrier; blow-up happens by `t1 + T`.
    pub fn t_sub(&self) -> f64 {
        self.sub.t_offset
    }
}

/// Bounds on `omega1` at `t = 0`, where the inner conditions are tightest;
/// `e = (2-b) T1^{-beta}/a1`.
fn chain_omega_bounds(
    m: f64,
    n: f64,
    b: f64,
    k1: f64,
    k2: f64,
    beta_bar: f64,
    e: f64,
) -> ([f64; 4], [f64; 2]) {
    let nb = n - 2.0 + b * mm(m);
    let lower = [
        1.0 / (b * m * k2 * nb),
        beta_bar * (m - 1.0) / (b * b * m * k1),
        1.0 / (b * m * k2 * (n + 2.0 / (m - 1.0))),
        safe_div(beta_bar * (m - 1.0), b * m * k2 * (2.0 * k1 / k2 - e)),
    ];
    let upper = [
        (1.0 - beta_bar) / (b * m * (k2 * nb - k1 * b / (m - 1.0))),
        (1.0 - beta_bar)
            / (b * m * k2 * (n + 2.0 / (m - 1.0) * (1.0 - k1 / k2) + e / (m - 1.0))),
    ];
    (lower, upper)
}

/// Relative inset of the quantities fitted to the data, so that the fitted
/// inequalities also hold after rounding.
const INSET: f64 = 1e-12;

/// `lambda^{m-1}` used for the amplitude margin at `t1`.
const CHAIN_LAMBDA_POW: f64 = 2.0;
/// Relative excess of the chosen amplitude over the required one.
const CHAIN_AMPLITUDE_EXCESS: f64 = 1e-4;

pub fn check_chain_conditions(chain: &ChainParams, spec: &ProblemSpec) -> ConditionReport {
    let z = &chain.barrier;
    let s = &chain.sub;
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);
    let (bb, ab) = (z.beta, z.alpha);
    let (c1, a1, t1o) = (z.c, z.a, z.t_offset);
    let w1 = z.omega();
    let e0 = (2.0 - b) * t1o.powf(-bb) / a1;
    let (lower, upper) = chain_omega_bounds(m, n, b, k1, k2, bb, e0);
    let lam_pow = CHAIN_LAMBDA_POW;
    let lambda = lam_pow.powf(1.0 / (m - 1.0));
    let big_t = s.t_offset;
    let tt = t1o + chain.t1;
    let a_sub = s.a * big_t.powf((p - m) / (p - 1.0));
    let a_z = a1 * tt.powf(bb);
    let amp_sub = s.c * big_t.powf(-1.0 / (p - 1.0));
    let amp_z = c1 * tt.powf(-ab);
    let b0 = beta0_alpha0(m, spec.n, b, k1, k2, chain.eps0);
    let e = vec![
        ConditionEntry::ge("family_chain", (z.family == Family::Chain) as u8 as f64, 1.0),
        ConditionEntry::le("alpha_bar_relation", (ab - (1.0 - bb) / (m - 1.0)).abs(), 1e-12),
        ConditionEntry::gt("beta_bar_positive", bb, 0.0),
        ConditionEntry::lt("beta_bar_below_beta0", bb, b0.beta0),
        ConditionEntry::lt("beta_bar_below_beta0_tilde", bb, b0.beta0_tilde),
        ConditionEntry::lt("exponent_gap", p, m + bb / ab),
        ConditionEntry::ge("omega1_lower_sigma", w1, lower[0]),
        ConditionEntry::ge("omega1_lower_delta", w1, lower[1]),
        ConditionEntry::le("omega1_upper", w1, upper[0]),
        ConditionEntry::gt("omega1_lower_sigma0", w1, lower[2]),
        ConditionEntry::gt("omega1_lower_delta0", w1, lower[3]),
        ConditionEntry::le("omega1_upper_inner", w1, upper[1]),
        ConditionEntry::le("eps_scaled", chain.eps * t1o.powf(-bb) / a1, chain.eps0),
        ConditionEntry::lt("q_below_eps", 2.0 - b, chain.eps),
        ConditionEntry::le("support_in_data_ball", a1 * t1o.powf(bb), chain.r0 * chain.r0 / 2.0),
        ConditionEntry::le("support_in_ball", a1 * t1o.powf(bb), shape_r(chain.r0, b)),
        ConditionEntry::le(
            "below_data_floor",
            (a1 * w1).powf(1.0 / (m - 1.0)),
            chain.floor * t1o.powf(ab),
        ),
        ConditionEntry::gt("t1_positive", chain.t1, 0.0),
        ConditionEntry::ge("scale_dominates", a_z, lam_pow * a_sub),
        ConditionEntry::ge("amplitude_dominates", amp_z, amp_sub),
        ConditionEntry::ge("amplitude_margin", amp_z, lambda * amp_sub),
        ConditionEntry::ge(
            "inner_amplitude",
            lam_pow * (1.0 - (2.0 - b) / (2.0 * a_z)),
            1.0,
        ),
        ConditionEntry::le(
            "horizon_bound",
            big_t.powf((p - m - bb / ab) / (p - 1.0)),
            (lambda * s.c / c1).powf(-bb / ab) * a1 / (lam_pow * s.a),
        ),
    ];
    ConditionReport::new(SystemKind::Chain, e)
}

/// Build the reaction-free subsolution `z` below an initial datum with
/// `u0 >= floor` on `B_{r0}`, and the time `t1` and horizon `T` after which
/// `z(., t1)` dominates the blow-up barrier `sub` started at `t1`.
pub fn find_chain_params(
    spec: &ProblemSpec,
    floor: f64,
    r0: f64,
    sub: &BarrierParams,
    eps0_override: Option<f64>,
) -> Result<ChainParams> {
    if !(floor > 0.0) || !(r0 > 0.0) {
        return Err(Error::OutOfRange(
            "the initial datum must exceed a positive floor on a ball".into(),
        ));
    }
    let (m, p) = (spec.m, spec.p);
    let n = spec.n as f64;
    let (b, k1, k2) = (spec.b(), spec.density.k1, spec.density.k2);

    let scale = f64::min(r0 * r0 / 2.0, shape_r(r0, b));
    let e_min = (2.0 - b) / scale;
    let eps0 = match eps0_override {
        Some(v) => v,
        None => f64::max(eps0_policy(m, spec.n, b, k1, k2).unwrap_or(0.0), 2.0 * e_min),
    };
    if eps0 < e_min {
        return Err(Error::Infeasible(format!(
            "eps0 = {eps0} is below (2-b)/(a1 T1^beta) = {e_min}"
        )));
    }
    let b0 = beta0_alpha0(m, spec.n, b, k1, k2, eps0);
    let upper = b0.beta0.min(b0.beta0_tilde);
    let lower = ((p - m) / (p - 1.0)).max(0.0);
    if !(upper > lower) {
        return Err(Error::Infeasible(format!(
            "p = {p} >= m + beta/alpha for every beta < min(beta0, beta0_tilde) = {upper}"
        )));
    }
    let beta_bar = 0.5 * (lower + upper);
    let alpha_bar = (1.0 - beta_bar) / (m - 1.0);

    let (lo, hi) = chain_omega_bounds(m, n, b, k1, k2, beta_bar, e_min);
    let w_lo = lo.into_iter().fold(0.0, f64::max);
    let w_hi = hi.into_iter().fold(f64::INFINITY, f64::min);
    if !(w_hi > w_lo) {
        let which = if w_lo == lo[0] || w_lo == lo[1] {
            "outer bounds"
        } else {
            "inner bounds"
        };
        return Err(Error::Infeasible(format!(
            "omega1 interval ({w_lo}, {w_hi}) is empty ({which})"
        )));
    }
    let w1 = 0.5 * (w_lo + w_hi);

    let t1o = 2.0 * scale * w1 / floor.powf(m - 1.0);
    let a1 = scale * (1.0 - INSET) * t1o.powf(-beta_bar);
    let c1 = (a1 * w1).powf(1.0 / (m - 1.0));
    let z = BarrierParams {
        family: Family::Chain,
        c: c1,
        a: a1,
        t_offset: t1o,
        alpha: alpha_bar,
        beta: beta_bar,
        m,
        p,
        b,
        k1,
        k2,
        n: spec.n,
    };

    let lam_pow = CHAIN_LAMBDA_POW;
    let lambda = lam_pow.powf(1.0 / (m - 1.0));
    let amp_factor = lambda * (1.0 + CHAIN_AMPLITUDE_EXCESS);
    let ratio = bb_ratio(beta_bar, alpha_bar);
    let (cs, asub) = (sub.c, sub.a);
    // T + t1 offset as a function of T, from the amplitude equality.
    let offset = |t: f64| (amp_factor * cs / c1).powf(-1.0 / alpha_bar) * t.powf(1.0 / ((p - 1.0) * alpha_bar));
    let expo = (p - m - ratio) / (p - 1.0);
    let rhs = (lambda * cs / c1).powf(-ratio) * a1 / (lam_pow * asub);
    let t_cond = rhs.powf(1.0 / expo);
    let a_need = (2.0 - b) / (2.0 * (1.0 - 1.0 / lam_pow));
    let t_inner = if a_need > 0.0 {
        (a_need / (a1 * (amp_factor * cs / c1).powf(-ratio))).powf((p - 1.0) * alpha_bar / beta_bar)
    } else {
        0.0
    };
    let t_pos = (t1o * (amp_factor * cs / c1).powf(1.0 / alpha_bar)).powf((p - 1.0) * alpha_bar);
    let mut big_t = 2.0 * [1.0, sub.t_offset, t_cond, t_inner, t_pos]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);

    let eps = eps0 * a1 * t1o.powf(beta_bar) * (1.0 - INSET);
    for _ in 0..400 {
        let t1 = offset(big_t) - t1o;
        let mut sub_t = sub.clone();
        sub_t.t_offset = big_t;
        let chain = ChainParams {
            barrier: z.clone(),
            t1,
            sub: sub_t,
            eps0,
            eps,
            floor,
            r0,
            beta0: b0,
            omega_interval: (w_lo, w_hi),
            lambda,
        };
        let rep = check_chain_conditions(&chain, spec);
        if rep.all_satisfied {
            return Ok(chain);
        }
        let only_t = rep.failures().iter().all(|e| {
            matches!(
                e.label.as_str(),
                "t1_positive" | "scale_dominates" | "amplitude_dominates" | "amplitude_margin" | "inner_amplitude" | "horizon_bound"
            )
        });
        if !only_t || !big_t.is_finite() {
            return Err(Error::Infeasible(rep.failure_summary()));
        }
        big_t *= 2.0;
    }
    Err(Error::Infeasible("horizon search did not terminate".into()))
}

fn bb_ratio(beta: f64, alpha: f64) -> f64 {
    beta / alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityModel;

    fn spec(m: f64, p: f64, n: u32, q: f64) -> ProblemSpec {
        ProblemSpec::new(m, p, n, DensityModel::power_tail(q).unwrap()).unwrap()
    }

    #[test]
    fn beta0_examples() {
        let r = beta0_alpha0(2.0, 3, 2.0, 1.0, 1.0, 0.0);
        assert!((r.beta0 - 0.4).abs() < 1e-15);
        assert!((r.beta0_tilde - 0.4).abs() < 1e-15);
        let r = beta0_alpha0(2.0, 3, 1.9, 1.0, 1.0, 0.01);
        assert!((r.beta0 - 1.9 / 4.8).abs() < 1e-15);
        assert!((r.beta0_tilde - 1.99 / 5.0).abs() < 1e-15);
        assert!(r.ordered && r.in_unit);
    }

    #[test]
    fn global_round_trip_and_infeasible() {
        let s = spec(2.0, 3.0, 3, 0.0);
        let g = find_global_params(&s, 1.0).unwrap();
        let rep = check_global_conditions(&g, &s, 1.0);
        assert!(rep.all_satisfied, "{rep}");
        assert!(rep.min_margin() >= 0.0);
        assert!(matches!(
            find_global_params(&spec(2.0, 2.5, 3, 0.0), 1.0),
            Err(Error::Infeasible(_))
        ));
        let d = DensityModel::power_tail(0.0)
            .unwrap()
            .with_constants(1.0, 3.0, 1.0, 3.0)
            .unwrap();
        let s = ProblemSpec::new(2.0, 3.0, 3, d).unwrap();
        assert!(matches!(find_global_params(&s, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn global_checker_detects_failures() {
        let s = spec(2.0, 3.0, 3, 0.0);
        let mut g = find_global_params(&s, 2.0).unwrap();
        g.t_offset = 0.01;
        let rep = check_global_conditions(&g, &s, 2.0);
        assert!(!rep.entry("support_covers_data").unwrap().satisfied);
        let mut g = find_global_params(&s, 2.0).unwrap();
        g.a = g.c.powf(s.m - 1.0) / 10.0;
        let rep = check_global_conditions(&g, &s, 2.0);
        assert!(rep.entry("beta_lower").unwrap().margin < 0.0);
    }

    #[test]
    fn blowup_round_trips() {
        for (m, p, n, q) in [(2.0, 3.0, 3, 0.0), (3.0, 2.0, 3, 0.0), (2.0, 2.0, 4, 0.5)] {
            let s = spec(m, p, n, q);
            let sub = find_blowup_params(&s).unwrap();
            let rep = check_blowup_conditions(&sub, &s);
            assert!(rep.all_satisfied, "{rep}");
        }
        let s = spec(3.0, 2.0, 3, 0.0);
        let sub = find_blowup_params(&s).unwrap();
        assert!(sub.omega() > 2.0 / 12.0);
        assert_eq!(check_blowup_conditions(&sub, &s).system, SystemKind::BlowupB);
        let s = spec(2.0, 2.0, 4, 0.5);
        assert_eq!(
            check_blowup_conditions(&find_blowup_params(&s).unwrap(), &s).system,
            SystemKind::BlowupC
        );
    }

    #[test]
    fn blowup_small_amplitude_fails_reaction_cap() {
        let s = spec(2.0, 3.0, 3, 0.0);
        let mut sub = find_blowup_params(&s).unwrap();
        sub.c = 1e-3;
        sub.a = sub.c;
        let rep = check_blowup_conditions(&sub, &s);
        assert!(!rep.entry("outer_f0").unwrap().satisfied);
    }

    #[test]
    fn omega_lower_violation_is_reported() {
        let s = spec(3.0, 2.0, 3, 0.0);
        let mut sub = find_blowup_params(&s).unwrap();
        sub.a = sub.c.powf(2.0) / 0.1;
        let rep = check_blowup_conditions(&sub, &s);
        assert!(!rep.entry("omega_lower").unwrap().satisfied);
    }

    #[test]
    fn chain_example() {
        let s = spec(2.0, 2.1, 3, 0.05);
        let sub = find_blowup_params(&s).unwrap();
        let ch = find_chain_params(&s, 0.5, 1.0, &sub, None).unwrap();
        let rep = check_chain_conditions(&ch, &s);
        assert!(rep.all_satisfied, "{rep}");
        assert!(ch.t1 > 0.0);
    }

    #[test]
    fn chain_infeasible_above_p_under() {
        let s = spec(2.0, 2.7, 3, 0.05);
        let sub = find_blowup_params(&s).unwrap();
        assert!(matches!(
            find_chain_params(&s, 0.5, 1.0, &sub, None),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn exponent_gap_predicate_matches_direct_form() {
        for &(m, p, bb) in &[(2.0, 2.1, 0.2), (2.0, 2.5, 0.2), (1.5, 1.6, 0.3)] {
            let al: f64 = (1.0 - bb) / (m - 1.0);
            assert_eq!(exponent_gap_holds(m, p, bb), p < m + bb / al);
        }
    }
}
