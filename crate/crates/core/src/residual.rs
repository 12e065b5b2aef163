//! Pointwise residuals `u_t - (1/rho) Laplace(u^m) - u^p` of the barrier
//! families, computed from exact derivatives of the closed forms.
//!
//! With `u = C zeta P^n`, `n = 1/(m-1)`, `P = 1 - s(r) eta / a` and
//! `Ls = s'' + (N-1) s'/r`:
//!
//! ```text
//! u_t           = C zeta' P^n - C zeta n (s eta'/a) P^{n-1}
//! Laplace(u^m)  = (C zeta)^m (n+1) [n P^{n-1} (s' eta/a)^2 - P^n (eta/a) Ls]
//! ```
//!
//! Every term carries the factor `P^{n-1}`, so the residual is stored as
//! `P^{n-1} * bracket` and its sign is read from the bracket alone. The local
//! scale is `P^{n-1}` times the sum of the absolute values of the bracket terms.

use rayon::prelude::*;

use crate::barriers::{BarrierParams, Family, Side};
use crate::conditions::{
    check_blowup_conditions, check_chain_conditions, check_global_conditions, ChainParams,
    ConditionEntry, ConditionReport, SystemKind,
};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::exponents::ProblemSpec;

/// Relative tolerance of the sign certificates.
pub const TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `r >= 1`, inside the support.
    D1,
    /// `r < 1` (or the inner limit at `r = 1`), inside the support.
    D2,
    Outside,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::D1 => "D1",
            Region::D2 => "D2",
            Region::Outside => "outside",
        }
    }
}

/// Residual at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResidual {
    pub value: f64,
    pub scale: f64,
    pub region: Region,
}

impl NodeResidual {
    /// `value / scale`, zero where the scale vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            0.0
        }
    }
}

/// Radii (each with the branch it is evaluated on) and times.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGrid {
    pub radii: Vec<(f64, Side)>,
    pub times: Vec<f64>,
}

impl ResidualGrid {
    /// `n_r` log-spaced radii on `[1e-3, r_max]`, both one-sided limits at `r = 1`,
    /// and `n_t` equispaced times on `[0, t_max]`.
    pub fn new(r_max: f64, t_max: f64, n_r: usize, n_t: usize) -> Self {
        let r_max = r_max.max(2e-3);
        let (lo, hi) = (1e-3f64.ln(), r_max.ln());
        let mut radii: Vec<(f64, Side)> = (0..n_r)
            .map(|i| {
                let r = (lo + (hi - lo) * i as f64 / (n_r.max(2) - 1) as f64).exp();
                (r, Side::of(r))
            })
            .collect();
        radii.push((1.0, Side::Inner));
        radii.push((1.0, Side::Outer));
        radii.sort_by(|x, y| x.0.total_cmp(&y.0));
        let times = (0..n_t)
            .map(|j| t_max * j as f64 / (n_t.max(2) - 1) as f64)
            .collect();
        Self { radii, times }
    }

    /// Default certification grid for a barrier: times on `[0, 10 T]` for the
    /// expanding families and `[0, T/2]` for the blow-up family; radii up to
    /// 1.2 times the largest free-boundary radius over those times.
    pub fn for_barrier(params: &BarrierParams, n_r: usize, n_t: usize) -> Result<Self> {
        let t_max = match params.family {
            Family::Sub => 0.5 * params.t_offset,
            Family::Super | Family::Chain => 10.0 * params.t_offset,
        };
        let mut fb: f64 = 0.0;
        for j in 0..n_t {
            let t = t_max * j as f64 / (n_t.max(2) - 1) as f64;
            fb = fb.max(params.support_radius(t)?);
        }
        Ok(Self::new(1.2 * fb, t_max, n_r, n_t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub grid: ResidualGrid,
    /// Row-major: `nodes[j * radii.len() + i]` is at `(radii[i], times[j])`.
    pub nodes: Vec<NodeResidual>,
}

impl ResidualField {
    pub fn node(&self, i_r: usize, i_t: usize) -> &NodeResidual {
        &self.nodes[i_t * self.grid.radii.len() + i_r]
    }

    fn coords(&self, k: usize) -> (f64, f64) {
        let nr = self.grid.radii.len();
        (self.grid.radii[k % nr].0, self.grid.times[k / nr])
    }

    /// Smallest relative residual inside the support with its node `(r, t)`.
    pub fn min_relative(&self) -> (f64, (f64, f64)) {
        self.extreme(|a, b| a < b)
    }

    /// Largest relative residual inside the support with its node `(r, t)`.
    pub fn max_relative(&self) -> (f64, (f64, f64)) {
        self.extreme(|a, b| a > b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> (f64, (f64, f64)) {
        let mut best: Option<(f64, usize)> = None;
        for (k, n) in self.nodes.iter().enumerate() {
            if n.region == Region::Outside {
                continue;
            }
            let v = n.relative();
            if best.map_or(true, |(b, _)| better(v, b)) {
                best = Some((v, k));
            }
        }
        match best {
            Some((v, k)) => (v, self.coords(k)),
            None => (0.0, (f64::NAN, f64::NAN)),
        }
    }

    pub fn count(&self, region: Region) -> usize {
        self.nodes.iter().filter(|n| n.region == region).count()
    }

    /// Rows `(r, t, region, residual)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, Region, f64)> + '_ {
        self.nodes.iter().enumerate().map(|(k, n)| {
            let (r, t) = self.coords(k);
            (r, t, n.region, n.value)
        })
    }
}

/// Closed-form residual of a barrier at `(r, t)` on the given branch.
pub fn residual_at(
    params: &BarrierParams,
    density: &DensityModel,
    r: f64,
    side: Side,
    t: f64,
) -> Result<NodeResidual> {
    let tf = params.time_factors(t)?;
    let sh = params.shape(r, side);
    let a = params.a;
    let p_arg = 1.0 - sh.s * tf.eta / a;
    let region = match (p_arg > 0.0, side) {
        (false, _) => Region::Outside,
        (true, Side::Outer) => Region::D1,
        (true, Side::Inner) => Region::D2,
    };
    if region == Region::Outside {
        return Ok(NodeResidual {
            value: 0.0,
            scale: 0.0,
            region,
        });
    }
    let m = params.m;
    let n = 1.0 / (m - 1.0);
    let c = params.c;
    let ea = tf.eta / a;
    let inv_rho = 1.0 / density.eval(r);
    let dfac = (c * tf.zeta).powf(m) * (n + 1.0) * ea;
    let mut terms = [
        c * tf.dzeta * p_arg,
        -c * tf.zeta * n * sh.s * tf.deta / a,
        -inv_rho * dfac * n * sh.ds * sh.ds * ea,
        inv_rho * dfac * p_arg * sh.lap,
        0.0,
    ];
    if params.family.has_reaction() {
        let pp = params.p;
        terms[4] = -(c * tf.zeta).powf(pp) * p_arg.powf(pp * n - n + 1.0);
    }
    let pre = p_arg.powf(n - 1.0);
    let bracket: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    Ok(NodeResidual {
        value: pre * bracket,
        scale: pre * scale,
        region,
    })
}

/// The same operator evaluated by fourth-order central differences of
/// [`BarrierParams::eval_side`], with steps `1e-3` relative to `r` and to the
/// time scale. Independent of the closed-form derivative algebra.
pub fn fd_residual(
    params: &BarrierParams,
    density: &DensityModel,
    r: f64,
    side: Side,
    t: f64,
) -> Result<f64> {
    let u = |r: f64, t: f64| params.eval_side(r, t, side);
    let ht = 1e-3
        * match params.family {
            Family::Sub => (params.t_offset - t).abs(),
            Family::Super | Family::Chain => params.t_offset + t,
        };
    let hr = 1e-3 * r;
    let d1 = |f: &dyn Fn(f64) -> Result<f64>, x: f64, h: f64| -> Result<f64> {
        Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
    };
    let d2 = |f: &dyn Fn(f64) -> Result<f64>, x: f64, h: f64| -> Result<f64> {
        Ok((-f(x + 2.0 * h)? + 16.0 * f(x + h)? - 30.0 * f(x)? + 16.0 * f(x - h)?
            - f(x - 2.0 * h)?)
            / (12.0 * h * h))
    };
    let w = |r: f64| u(r, t).map(|v| v.powf(params.m));
    let ut = d1(&|s| u(r, s), t, ht)?;
    let lap = d2(&w, r, hr)? + (params.n as f64 - 1.0) / r * d1(&w, r, hr)?;
    let react = if params.family.has_reaction() {
        u(r, t)?.powf(params.p)
    } else {
        0.0
    };
    Ok(ut - lap / density.eval(r) - react)
}

/// Residual field on a grid without checking the parameter system.
pub fn residual_field(
    params: &BarrierParams,
    density: &DensityModel,
    grid: &ResidualGrid,
) -> Result<ResidualField> {
    let nr = grid.radii.len();
    let nodes = (0..nr * grid.times.len())
        .into_par_iter()
        .map(|k| {
            let (r, side) = grid.radii[k % nr];
            residual_at(params, density, r, side, grid.times[k / nr])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualField {
        grid: grid.clone(),
        nodes,
    })
}

fn refuse(rep: &ConditionReport) -> Error {
    let labels: Vec<&str> = rep.failures().iter().map(|e| e.label.as_str()).collect();
    Error::ConditionNotVerified(format!("{}: {}", rep.system.as_str(), labels.join(", ")))
}

/// Supersolution residual with its minimum relative value; refuses parameters
/// that fail the global-existence system.
pub fn residual_super(
    params: &BarrierParams,
    spec: &ProblemSpec,
    grid: &ResidualGrid,
) -> Result<(ResidualField, f64)> {
    let rep = check_global_conditions(params, spec, 0.0);
    if !rep.all_satisfied {
        return Err(refuse(&rep));
    }
    let f = residual_field(params, &spec.density, grid)?;
    let v = f.min_relative().0;
    Ok((f, v))
}

/// Blow-up subsolution residual with its maximum relative value; all grid
/// times must lie strictly below `T`.
pub fn residual_sub(
    params: &BarrierParams,
    spec: &ProblemSpec,
    grid: &ResidualGrid,
) -> Result<(ResidualField, f64)> {
    let rep = check_blowup_conditions(params, spec);
    if !rep.all_satisfied {
        return Err(refuse(&rep));
    }
    let f = residual_field(params, &spec.density, grid)?;
    let v = f.max_relative().0;
    Ok((f, v))
}

/// Reaction-free subsolution residual `z_t - (1/rho) Laplace(z^m)` with its
/// maximum relative value.
pub fn residual_chain(
    chain: &ChainParams,
    spec: &ProblemSpec,
    grid: &ResidualGrid,
) -> Result<(ResidualField, f64)> {
    let rep = check_chain_conditions(chain, spec);
    if !rep.all_satisfied {
        return Err(refuse(&rep));
    }
    let f = residual_field(&chain.barrier, &spec.density, grid)?;
    let v = f.max_relative().0;
    Ok((f, v))
}

/// Time probes for the interface checks.
pub fn default_time_probe(params: &BarrierParams, n: usize) -> Vec<f64> {
    let t_max = match params.family {
        Family::Sub => 0.99 * params.t_offset,
        Family::Super | Family::Chain => 10.0 * params.t_offset,
    };
    (0..n).map(|j| t_max * j as f64 / (n.max(2) - 1) as f64).collect()
}

/// Continuity of the barrier and of the flux of `w^m` across `r = 1`: equality
/// for the expanding families, `outer >= inner` for the blow-up family.
pub fn verify_gluing(params: &BarrierParams, times: &[f64]) -> Result<ConditionReport> {
    let mut e = Vec::with_capacity(2 * times.len());
    for &t in times {
        let vin = params.eval_side(1.0, t, Side::Inner)?;
        let vout = params.eval_side(1.0, t, Side::Outer)?;
        let vs = vin.abs().max(vout.abs());
        e.push(ConditionEntry::le(
            format!("value@t={t:e}"),
            (vin - vout).abs(),
            1e-12 * vs,
        ));
        let fin = params.flux(Side::Inner, t)?;
        let fout = params.flux(Side::Outer, t)?;
        let fs = fin.abs().max(fout.abs());
        match params.family {
            Family::Sub => e.push(ConditionEntry::ge(format!("flux@t={t:e}"), fout, fin)),
            Family::Super | Family::Chain => e.push(ConditionEntry::le(
                format!("flux@t={t:e}"),
                (fin - fout).abs(),
                1e-12 * fs,
            )),
        }
    }
    Ok(ConditionReport::new(SystemKind::Gluing, e))
}

/// Maximum of `phi` over `[lo, hi]` from a uniform grid refined by golden
/// section around the best cell.
fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let (mut best, mut kb) = (f64::NEG_INFINITY, 0);
    for k in 0..=n {
        let v = f(lo + h * k as f64);
        if v > best {
            best = v;
            kb = k;
        }
    }
    let (mut a, mut b) = (
        lo + h * kb.saturating_sub(1) as f64,
        (lo + h * (kb + 1) as f64).min(hi),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) >= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Sign checks on the reduced polynomial `phi(F) = sigma F - delta - gamma F^theta`.
///
/// Super: `phi(0) >= 0`, `phi(1) >= 0` and `gamma >= 0` in both regions.
/// Sub: `phi(F0) <= 0` and `F0 <= 1` with `F0` the stationary point, cross-checked
/// against a 10^4-point grid maximum. Chain: `phi` is linear, so `-delta <= 0`
/// and `sigma - delta <= 0`. Each label keeps the worst probed time.
pub fn phi_endpoint_check(params: &BarrierParams, times: &[f64]) -> Result<ConditionReport> {
    let cs = params.coefficients();
    let mut worst: Vec<ConditionEntry> = Vec::new();
    let mut keep = |e: ConditionEntry| {
        let key = e.label.split('@').next().unwrap_or("").to_string();
        match worst
            .iter_mut()
            .find(|w| w.label.split('@').next() == Some(key.as_str()))
        {
            Some(w) => {
                if e.margin < w.margin || (!e.satisfied && w.satisfied) {
                    *w = e;
                }
            }
            None => worst.push(e),
        }
    };
    for &t in times {
        let g = cs.gamma(t)?;
        let regions = [
            ("outer", cs.sigma(t)?, cs.delta(t)?),
            ("inner", cs.sigma0(t)?, cs.delta0(t)?),
        ];
        for (tag, s, d) in regions {
            let scale = s.abs() + d.abs() + g.abs();
            let at = |name: &str| format!("{name}_{tag}@t={t:e}");
            match params.family {
                Family::Super => {
                    let sl = 1e-12 * scale;
                    keep(ConditionEntry::ge_slack(at("phi0"), cs.phi(s, d, g, 0.0), 0.0, sl));
                    keep(ConditionEntry::ge_slack(at("phi1"), cs.phi(s, d, g, 1.0), 0.0, sl));
                    keep(ConditionEntry::ge(at("concavity"), g, 0.0));
                }
                Family::Sub => {
                    let f0 = cs.f0(s, g);
                    let phi0 = cs.phi(s, d, g, f0);
                    keep(ConditionEntry::le_slack(at("phi_f0"), phi0, 0.0, 1e-12 * scale));
                    keep(ConditionEntry::le(at("f0_below_one"), f0, 1.0));
                    let gm = grid_max(|f| cs.phi(s, d, g, f), 0.0, 1.0, 10_000);
                    keep(ConditionEntry::le(
                        at("grid_max"),
                        (gm - cs.phi(s, d, g, f0.min(1.0))).abs(),
                        1e-9 * scale,
                    ));
                }
                Family::Chain => {
                    let sl = 1e-12 * scale;
                    keep(ConditionEntry::le_slack(at("phi0"), -d, 0.0, sl));
                    keep(ConditionEntry::le_slack(at("phi1"), s - d, 0.0, sl));
                }
            }
        }
    }
    Ok(ConditionReport::new(SystemKind::PhiEndpoints, worst))
}
