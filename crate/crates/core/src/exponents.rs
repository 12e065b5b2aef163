//! Critical exponents and regime classification.
//!
//! With `b = 2 - q` and `r = k2/k1`, the upper exponent is
//!
//! ```text
//! p_bar = [m(N-2+b) + b/(m-1) (m - r)] / [N-2 + b/(m-1) (m - r)]
//! ```
//!
//! and the lower exponent `p_under` is the same expression with `r = k1/k2`.
//! Both are well defined when `k2/k1 < m + (m-1)(N-2)/b`.
//!
//! The formulas are evaluated in exact rational arithmetic. Every finite `f64`
//! is a dyadic rational, so the float entry points convert their inputs exactly;
//! only comparisons of a float `p` against the thresholds use a `1e-12` slack.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::density::DensityModel;
use crate::error::{Error, Result};

/// Relative slack for regime boundaries when `p` is given as a float.
pub const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub m: f64,
    pub p: f64,
    pub n: u32,
    pub density: DensityModel,
}

impl ProblemSpec {
    pub fn new(m: f64, p: f64, n: u32, density: DensityModel) -> Result<Self> {
        if !(m > 1.0) || !(p > 1.0) || n < 3 {
            return Err(Error::OutOfRange(format!(
                "need m > 1, p > 1, N >= 3; got m = {m}, p = {p}, N = {n}"
            )));
        }
        Ok(Self { m, p, n, density })
    }

    pub fn b(&self) -> f64 {
        self.density.b()
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.m, p, self.n, self.density.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p > p_bar`: small compactly supported data give global solutions.
    GlobalSmallData,
    /// `1 < p < m`: every nontrivial datum blows up.
    BlowUpAllDataSubM,
    /// `m <= p < p_under`: every nontrivial datum blows up (small `q`).
    BlowUpAllDataIntermediate,
    /// `p_under <= p <= p_bar`: not decided.
    Gap,
    /// The structural condition on `k2/k1` fails.
    Inadmissible,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::GlobalSmallData => "GlobalSmallData",
            Regime::BlowUpAllDataSubM => "BlowUpAllData_SubM",
            Regime::BlowUpAllDataIntermediate => "BlowUpAllData_Intermediate",
            Regime::Gap => "Gap",
            Regime::Inadmissible => "Inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeClassification {
    pub b: f64,
    pub p_bar: Option<f64>,
    pub p_under: Option<f64>,
    pub admissibility_margin: f64,
    pub regime: Regime,
    /// Suggested bound on `q` for the intermediate-range construction.
    pub eps_required: Option<f64>,
    /// Blow-up for large data holds for every `p > 1`.
    pub large_data_blowup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityCheck {
    pub holds: bool,
    /// `m + (m-1)(N-2)/b - k2/k1`.
    pub margin: f64,
}

/// Exact conversion of a finite float.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite input {x}"))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parse `a/b`, an integer, or a decimal (optionally with exponent) into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::OutOfRange(format!("cannot parse `{s}` as a number"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(num);
    if shift >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// `b = 2 - q`.
pub fn b_of_q(q: f64) -> Result<f64> {
    if (0.0..2.0).contains(&q) {
        Ok(2.0 - q)
    } else {
        Err(Error::OutOfRange(format!("q = {q} is not in [0, 2)")))
    }
}

fn admissibility_rhs_exact(m: &BigRational, n: u32, b: &BigRational) -> BigRational {
    m + (m - BigRational::one()) * rat_int(n as i64 - 2) / b
}

/// Exact margin `m + (m-1)(N-2)/b - k2/k1`; positive iff the condition holds.
pub fn admissibility_margin_exact(
    m: &BigRational,
    n: u32,
    b: &BigRational,
    k1: &BigRational,
    k2: &BigRational,
) -> BigRational {
    admissibility_rhs_exact(m, n, b) - k2 / k1
}

pub fn check_admissibility(m: f64, n: u32, b: f64, k1: f64, k2: f64) -> AdmissibilityCheck {
    let margin = admissibility_margin_exact(&rat(m), n, &rat(b), &rat(k1), &rat(k2));
    AdmissibilityCheck {
        holds: margin.is_positive(),
        margin: to_f64(&margin),
    }
}

fn critical_exact(
    m: &BigRational,
    n: u32,
    b: &BigRational,
    ratio: &BigRational,
) -> BigRational {
    let one = BigRational::one();
    let n2 = rat_int(n as i64 - 2);
    let tail = b / (m - &one) * (m - ratio);
    (m * (&n2 + b) + &tail) / (n2 + tail)
}

fn require_admissible(
    m: &BigRational,
    n: u32,
    b: &BigRational,
    k1: &BigRational,
    k2: &BigRational,
) -> Result<()> {
    let margin = admissibility_margin_exact(m, n, b, k1, k2);
    if margin.is_positive() {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            margin: to_f64(&margin),
        })
    }
}

pub fn p_bar_exact(
    m: &BigRational,
    n: u32,
    b: &BigRational,
    k1: &BigRational,
    k2: &BigRational,
) -> Result<BigRational> {
    require_admissible(m, n, b, k1, k2)?;
    Ok(critical_exact(m, n, b, &(k2 / k1)))
}

pub fn p_under_exact(
    m: &BigRational,
    n: u32,
    b: &BigRational,
    k1: &BigRational,
    k2: &BigRational,
) -> Result<BigRational> {
    require_admissible(m, n, b, k1, k2)?;
    Ok(critical_exact(m, n, b, &(k1 / k2)))
}

pub fn p_bar(m: f64, n: u32, b: f64, k1: f64, k2: f64) -> Result<f64> {
    p_bar_exact(&rat(m), n, &rat(b), &rat(k1), &rat(k2)).map(|x| to_f64(&x))
}

pub fn p_under(m: f64, n: u32, b: f64, k1: f64, k2: f64) -> Result<f64> {
    p_under_exact(&rat(m), n, &rat(b), &rat(k1), &rat(k2)).map(|x| to_f64(&x))
}

/// Regime of an exact `(m, p)` pair; no slack is applied.
pub fn classify_exact(
    m: &BigRational,
    p: &BigRational,
    n: u32,
    b: &BigRational,
    k1: &BigRational,
    k2: &BigRational,
) -> Regime {
    if !admissibility_margin_exact(m, n, b, k1, k2).is_positive() {
        return Regime::Inadmissible;
    }
    let pb = critical_exact(m, n, b, &(k2 / k1));
    let pu = critical_exact(m, n, b, &(k1 / k2));
    if p > &pb {
        Regime::GlobalSmallData
    } else if p < m {
        Regime::BlowUpAllDataSubM
    } else if p < &pu {
        Regime::BlowUpAllDataIntermediate
    } else {
        Regime::Gap
    }
}

fn slack_gt(x: f64, y: f64) -> bool {
    x > y + BOUNDARY_SLACK * y.abs().max(1.0)
}

fn slack_lt(x: f64, y: f64) -> bool {
    x < y - BOUNDARY_SLACK * y.abs().max(1.0)
}

fn classify_with(
    m: f64,
    p: f64,
    n: u32,
    b: f64,
    k1: f64,
    k2: f64,
    exact_p: Option<&BigRational>,
) -> RegimeClassification {
    let adm = check_admissibility(m, n, b, k1, k2);
    if !adm.holds {
        return RegimeClassification {
            b,
            p_bar: None,
            p_under: None,
            admissibility_margin: adm.margin,
            regime: Regime::Inadmissible,
            eps_required: None,
            large_data_blowup: true,
        };
    }
    let (mr, br, k1r, k2r) = (rat(m), rat(b), rat(k1), rat(k2));
    let pb = p_bar_exact(&mr, n, &br, &k1r, &k2r).expect("admissibility checked");
    let pu = p_under_exact(&mr, n, &br, &k1r, &k2r).expect("admissibility checked");
    let (pbf, puf) = (to_f64(&pb), to_f64(&pu));
    let regime = match exact_p {
        Some(pr) => classify_exact(&mr, pr, n, &br, &k1r, &k2r),
        None => {
            if slack_gt(p, pbf) {
                Regime::GlobalSmallData
            } else if slack_lt(p, m) {
                Regime::BlowUpAllDataSubM
            } else if slack_lt(p, puf) {
                Regime::BlowUpAllDataIntermediate
            } else {
                Regime::Gap
            }
        }
    };
    let eps_required = (regime == Regime::BlowUpAllDataIntermediate)
        .then(|| crate::conditions::eps0_policy(m, n, b, k1, k2))
        .flatten();
    RegimeClassification {
        b,
        p_bar: Some(pbf),
        p_under: Some(puf),
        admissibility_margin: adm.margin,
        regime,
        eps_required,
        large_data_blowup: true,
    }
}

/// Classify a problem whose exponent `p` is a float (boundary slack `1e-12`).
pub fn classify_regime(spec: &ProblemSpec) -> RegimeClassification {
    let d = &spec.density;
    classify_with(spec.m, spec.p, spec.n, d.b(), d.k1, d.k2, None)
}

/// Classify with `m` and `p` given exactly; the density constants are converted exactly.
pub fn classify_regime_exact(
    m: &BigRational,
    p: &BigRational,
    n: u32,
    density: &DensityModel,
) -> RegimeClassification {
    classify_with(
        to_f64(m),
        to_f64(p),
        n,
        density.b(),
        density.k1,
        density.k2,
        Some(p),
    )
}
