//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Numbers accept
//! decimals and exact fractions (`8/3`). `p` may be a comma-separated list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use pme_core::barriers::fmt_f64;
use pme_core::exponents::{parse_rational, to_f64};
use pme_core::{DensityKind, DensityModel, Family, ProblemSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Regimes,
    Params,
    Residual,
    Simulate,
    Dichotomy,
    Chain,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Regimes => "regimes",
            Scenario::Params => "params",
            Scenario::Residual => "residual",
            Scenario::Simulate => "simulate",
            Scenario::Dichotomy => "dichotomy",
            Scenario::Chain => "chain",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "regimes" => Scenario::Regimes,
            "params" => Scenario::Params,
            "residual" => Scenario::Residual,
            "simulate" => Scenario::Simulate,
            "dichotomy" => Scenario::Dichotomy,
            "chain" => Scenario::Chain,
            other => return Err(CliError::Config(format!("unknown scenario `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// Blow-up subsolution at `t = 0`.
    BarrierSub,
    /// `u0.fraction` times the supersolution at `t = 0`.
    BarrierSuperFraction,
    /// `A (1 - (r/R0)^2)_+`.
    Bump,
    /// `A` on `r <= R0`, then a linear ramp to zero over one unit of radius.
    Plateau,
}

impl InitialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialKind::BarrierSub => "barrier-sub",
            InitialKind::BarrierSuperFraction => "barrier-super-fraction",
            InitialKind::Bump => "bump",
            InitialKind::Plateau => "plateau",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "barrier-sub" => InitialKind::BarrierSub,
            "barrier-super-fraction" => InitialKind::BarrierSuperFraction,
            "bump" => InitialKind::Bump,
            "plateau" => InitialKind::Plateau,
            other => return Err(CliError::Config(format!("unknown u0.kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub m: f64,
    pub p: Vec<f64>,
    pub n: u32,
    pub density: DensityKind,
    pub q: f64,
    /// Overrides of the certified density constants `(k1, k2, rho1, rho2)`.
    pub constants: Option<(f64, f64, f64, f64)>,
    pub grid_r: Option<f64>,
    pub grid_n: usize,
    pub u0: InitialKind,
    pub u0_amplitude: f64,
    pub u0_radius: f64,
    pub u0_fraction: f64,
    pub horizon: Option<f64>,
    pub m_blow: Option<f64>,
    pub samples: usize,
    /// Support radius of the data used by the supersolution construction.
    pub r0: f64,
    /// Horizon `T` of the blow-up subsolution.
    pub sub_horizon: f64,
    pub family: Family,
    pub residual_nr: usize,
    pub residual_nt: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Simulate,
            m: 2.0,
            p: vec![3.0],
            n: 3,
            density: DensityKind::PowerTail,
            q: 0.0,
            constants: None,
            grid_r: None,
            grid_n: 400,
            u0: InitialKind::Bump,
            u0_amplitude: 1.0,
            u0_radius: 1.0,
            u0_fraction: 0.5,
            horizon: None,
            m_blow: None,
            samples: 50,
            r0: 1.0,
            sub_horizon: 1.0,
            family: Family::Super,
            residual_nr: 200,
            residual_nt: 200,
            seed: 0,
            out: None,
        }
    }
}

/// Decimal or exact fraction.
pub fn num(key: &str, v: &str) -> CliResult<f64> {
    let bad = || CliError::Config(format!("`{key}`: `{v}` is not a number"));
    if v.contains('/') {
        parse_rational(v).map(|r| to_f64(&r)).map_err(|_| bad())
    } else {
        v.parse::<f64>().map_err(|_| bad())
    }
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not an integer")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if kv.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("duplicate key `{k}`")));
            }
        }
        let mut c = Self::default();
        let mut k1234 = [None; 4];
        for (k, v) in &kv {
            let v = v.as_str();
            match k.as_str() {
                "scenario" => c.scenario = Scenario::parse(v)?,
                "m" => c.m = num(k, v)?,
                "p" => {
                    c.p = v
                        .split(',')
                        .map(|s| num(k, s.trim()))
                        .collect::<CliResult<_>>()?
                }
                "N" => c.n = int(k, v)?,
                "density.kind" => c.density = DensityKind::parse(v)?,
                "density.q" => c.q = num(k, v)?,
                "density.k1" => k1234[0] = Some(num(k, v)?),
                "density.k2" => k1234[1] = Some(num(k, v)?),
                "density.rho1" => k1234[2] = Some(num(k, v)?),
                "density.rho2" => k1234[3] = Some(num(k, v)?),
                "grid.R" => c.grid_r = Some(num(k, v)?),
                "grid.n" => c.grid_n = int(k, v)?,
                "u0.kind" => c.u0 = InitialKind::parse(v)?,
                "u0.amplitude" => c.u0_amplitude = num(k, v)?,
                "u0.radius" => c.u0_radius = num(k, v)?,
                "u0.fraction" => c.u0_fraction = num(k, v)?,
                "horizon" => c.horizon = Some(num(k, v)?),
                "M_blow" => c.m_blow = Some(num(k, v)?),
                "samples" => c.samples = int(k, v)?,
                "r0" => c.r0 = num(k, v)?,
                "sub.T" => c.sub_horizon = num(k, v)?,
                "family" => c.family = Family::parse(v)?,
                "residual.nr" => c.residual_nr = int(k, v)?,
                "residual.nt" => c.residual_nt = int(k, v)?,
                "seed" => c.seed = int(k, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                other => return Err(CliError::Config(format!("unknown key `{other}`"))),
            }
        }
        c.constants = match k1234 {
            [None, None, None, None] => None,
            [Some(a), Some(b), Some(r1), Some(r2)] => Some((a, b, r1, r2)),
            _ => {
                return Err(CliError::Config(
                    "density.k1, k2, rho1, rho2 must be given together".into(),
                ))
            }
        };
        if c.p.is_empty() {
            return Err(CliError::Config("`p` is empty".into()));
        }
        Ok(c)
    }

    pub fn density_model(&self) -> CliResult<DensityModel> {
        let d = DensityModel::from_kind(self.density, self.q)?;
        Ok(match self.constants {
            Some((k1, k2, r1, r2)) => d.with_constants(k1, k2, r1, r2)?,
            None => d,
        })
    }

    pub fn spec(&self, p: f64) -> CliResult<ProblemSpec> {
        Ok(ProblemSpec::new(self.m, p, self.n, self.density_model()?)?)
    }

    /// The first exponent of `p`.
    pub fn p0(&self) -> f64 {
        self.p[0]
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.p.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(f, "scenario = {}", self.scenario.as_str())?;
        writeln!(f, "m = {}", fmt_f64(self.m))?;
        writeln!(f, "p = {}", ps.join(", "))?;
        writeln!(f, "N = {}", self.n)?;
        writeln!(f, "density.kind = {}", self.density.as_str())?;
        writeln!(f, "density.q = {}", fmt_f64(self.q))?;
        if let Some((k1, k2, r1, r2)) = self.constants {
            writeln!(f, "density.k1 = {}", fmt_f64(k1))?;
            writeln!(f, "density.k2 = {}", fmt_f64(k2))?;
            writeln!(f, "density.rho1 = {}", fmt_f64(r1))?;
            writeln!(f, "density.rho2 = {}", fmt_f64(r2))?;
        }
        if let Some(r) = self.grid_r {
            writeln!(f, "grid.R = {}", fmt_f64(r))?;
        }
        writeln!(f, "grid.n = {}", self.grid_n)?;
        writeln!(f, "u0.kind = {}", self.u0.as_str())?;
        writeln!(f, "u0.amplitude = {}", fmt_f64(self.u0_amplitude))?;
        writeln!(f, "u0.radius = {}", fmt_f64(self.u0_radius))?;
        writeln!(f, "u0.fraction = {}", fmt_f64(self.u0_fraction))?;
        if let Some(h) = self.horizon {
            writeln!(f, "horizon = {}", fmt_f64(h))?;
        }
        if let Some(mb) = self.m_blow {
            writeln!(f, "M_blow = {}", fmt_f64(mb))?;
        }
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "r0 = {}", fmt_f64(self.r0))?;
        writeln!(f, "sub.T = {}", fmt_f64(self.sub_horizon))?;
        writeln!(f, "family = {}", self.family.as_str())?;
        writeln!(f, "residual.nr = {}", self.residual_nr)?;
        writeln!(f, "residual.nt = {}", self.residual_nt)?;
        writeln!(f, "seed = {}", self.seed)?;
        if let Some(o) = &self.out {
            writeln!(f, "out = {}", o.display())?;
        }
        Ok(())
    }
}
