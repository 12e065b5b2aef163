//! Closed-form barrier families.
//!
//! All three families share the profile
//!
//! ```text
//! w(r, t) = C zeta(t) [1 - s(r) eta(t) / a]_+^{1/(m-1)}
//! ```
//!
//! and differ in the time factors and the inner shape `s` on the unit ball:
//!
//! | family | zeta            | eta            | s, r < 1          | s, r >= 1 |
//! |--------|-----------------|----------------|-------------------|-----------|
//! | Super  | (T+t)^-alpha    | (T+t)^-beta    | (b r^2 + 2 - b)/2 | r^b       |
//! | Sub    | (T-t)^-alpha    | (T-t)^beta     | r^2               | r^b       |
//! | Chain  | (T+t)^-alpha    | (T+t)^-beta    | (b r^2 + 2 - b)/2 | r^b       |
//!
//! The Chain family is a subsolution of the reaction-free equation.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Super,
    Sub,
    Chain,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Super => "super",
            Family::Sub => "sub",
            Family::Chain => "chain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "super" => Ok(Family::Super),
            "sub" => Ok(Family::Sub),
            "chain" => Ok(Family::Chain),
            other => Err(Error::OutOfRange(format!("unknown barrier family `{other}`"))),
        }
    }

    /// Whether the reaction term `u^p` belongs to the equation the family is built for.
    pub fn has_reaction(self) -> bool {
        !matches!(self, Family::Chain)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which branch of the piecewise shape is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `r < 1` (and the one-sided limit at `r = 1`).
    Inner,
    /// `r >= 1`.
    Outer,
}

impl Side {
    pub fn of(r: f64) -> Side {
        if r < 1.0 {
            Side::Inner
        } else {
            Side::Outer
        }
    }
}

/// `r^b` for `r >= 1`, `(b r^2 + 2 - b)/2` for `r < 1`.
pub fn shape_r(r: f64, b: f64) -> f64 {
    if r >= 1.0 {
        r.powf(b)
    } else {
        (b * r * r + 2.0 - b) / 2.0
    }
}

/// `r^b` for `r > 1`, `r^2` for `r <= 1`.
pub fn shape_s(r: f64, b: f64) -> f64 {
    if r > 1.0 {
        r.powf(b)
    } else {
        r * r
    }
}

/// A shape branch with its radial derivative and radial Laplacian
/// `s'' + (N-1) s'/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeEval {
    pub s: f64,
    pub ds: f64,
    pub lap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ShapeKind {
    Power,
    Blend,
    Square,
}

fn shape_kind(family: Family, side: Side) -> ShapeKind {
    match (family, side) {
        (_, Side::Outer) => ShapeKind::Power,
        (Family::Sub, Side::Inner) => ShapeKind::Square,
        (_, Side::Inner) => ShapeKind::Blend,
    }
}

fn shape_eval(kind: ShapeKind, r: f64, b: f64, n: u32) -> ShapeEval {
    let nf = n as f64;
    match kind {
        ShapeKind::Power => ShapeEval {
            s: r.powf(b),
            ds: b * r.powf(b - 1.0),
            lap: b * (b + nf - 2.0) * r.powf(b - 2.0),
        },
        ShapeKind::Blend => ShapeEval {
            s: (b * r * r + 2.0 - b) / 2.0,
            ds: b * r,
            lap: b * nf,
        },
        ShapeKind::Square => ShapeEval {
            s: r * r,
            ds: 2.0 * r,
            lap: 2.0 * nf,
        },
    }
}

/// Time factors `zeta, zeta', eta, eta'` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFactors {
    pub zeta: f64,
    pub dzeta: f64,
    pub eta: f64,
    pub deta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierParams {
    pub family: Family,
    /// Amplitude `C`.
    pub c: f64,
    /// Support scale `a`.
    pub a: f64,
    /// Time offset (Super, Chain) or horizon (Sub).
    pub t_offset: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub p: f64,
    pub b: f64,
    pub k1: f64,
    pub k2: f64,
    pub n: u32,
}

impl BarrierParams {
    /// `omega = C^{m-1}/a`.
    pub fn omega(&self) -> f64 {
        self.c.powf(self.m - 1.0) / self.a
    }

    fn inv_m1(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }

    /// Time factors at `t`; the Sub family is defined only for `t < T`.
    pub fn time_factors(&self, t: f64) -> Result<TimeFactors> {
        let (al, be) = (self.alpha, self.beta);
        match self.family {
            Family::Super | Family::Chain => {
                let s = self.t_offset + t;
                if !(s > 0.0) {
                    return Err(Error::DomainError(format!("T + t = {s} must be positive")));
                }
                Ok(TimeFactors {
                    zeta: s.powf(-al),
                    dzeta: -al * s.powf(-al - 1.0),
                    eta: s.powf(-be),
                    deta: -be * s.powf(-be - 1.0),
                })
            }
            Family::Sub => {
                let s = self.t_offset - t;
                if !(s > 0.0) {
                    return Err(Error::DomainError(format!(
                        "sub barrier evaluated at t = {t} >= T = {}",
                        self.t_offset
                    )));
                }
                Ok(TimeFactors {
                    zeta: s.powf(-al),
                    dzeta: al * s.powf(-al - 1.0),
                    eta: s.powf(be),
                    deta: -be * s.powf(be - 1.0),
                })
            }
        }
    }

    /// Shape branch (value, derivative, radial Laplacian) on the given side.
    pub fn shape(&self, r: f64, side: Side) -> ShapeEval {
        shape_eval(shape_kind(self.family, side), r, self.b, self.n)
    }

    /// Shape value using the branch that owns `r`.
    pub fn shape_value(&self, r: f64) -> f64 {
        match self.family {
            Family::Sub => shape_s(r, self.b),
            _ => shape_r(r, self.b),
        }
    }

    /// Radius where the shape reaches `level` (inverse of the monotone shape).
    pub fn shape_inverse(&self, level: f64) -> f64 {
        if level >= 1.0 {
            return level.powf(1.0 / self.b);
        }
        match self.family {
            Family::Sub => level.max(0.0).sqrt(),
            _ => {
                let x = (2.0 * level - 2.0 + self.b) / self.b;
                x.max(0.0).sqrt()
            }
        }
    }

    /// Free-boundary radius at time `t`: the barrier is positive exactly where
    /// `s(r) < a / eta(t)`.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        let tf = self.time_factors(t)?;
        let level = self.a / tf.eta;
        if self.family != Family::Sub && level <= 1.0 - self.b / 2.0 {
            return Ok(0.0);
        }
        Ok(self.shape_inverse(level))
    }

    /// `1 - s(r) eta / a` (may be negative) on a chosen side.
    pub fn profile_arg(&self, r: f64, side: Side, tf: &TimeFactors) -> f64 {
        1.0 - self.shape(r, side).s * tf.eta / self.a
    }

    pub fn eval_side(&self, r: f64, t: f64, side: Side) -> Result<f64> {
        let tf = self.time_factors(t)?;
        let f = self.profile_arg(r, side, &tf).max(0.0);
        Ok(self.c * tf.zeta * f.powf(self.inv_m1()))
    }

    /// Barrier value at radius `r` and time `t`.
    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        self.eval_side(r, t, Side::of(r))
    }

    /// One-sided radial derivative of `w^m` at `r = 1`.
    pub fn flux(&self, side: Side, t: f64) -> Result<f64> {
        let tf = self.time_factors(t)?;
        let sh = self.shape(1.0, side);
        let f = (1.0 - sh.s * tf.eta / self.a).max(0.0);
        let m = self.m;
        Ok(-(self.c * tf.zeta).powf(m) * m * self.inv_m1()
            * f.powf(self.inv_m1())
            * sh.ds
            * tf.eta
            / self.a)
    }

    /// Coefficient functions of the family.
    pub fn coefficients(&self) -> CoefficientSet {
        CoefficientSet {
            params: self.clone(),
            k: k_constant(self.m, self.p),
        }
    }

    /// Flat key-value record.
    pub fn to_record(&self) -> Vec<(&'static str, String)> {
        vec![
            ("family", self.family.as_str().to_string()),
            ("C", fmt_f64(self.c)),
            ("a", fmt_f64(self.a)),
            ("T", fmt_f64(self.t_offset)),
            ("alpha", fmt_f64(self.alpha)),
            ("beta", fmt_f64(self.beta)),
            ("m", fmt_f64(self.m)),
            ("p", fmt_f64(self.p)),
            ("b", fmt_f64(self.b)),
            ("k1", fmt_f64(self.k1)),
            ("k2", fmt_f64(self.k2)),
            ("N", self.n.to_string()),
            ("omega", fmt_f64(self.omega())),
        ]
    }

    /// Inverse of [`to_record`](Self::to_record); the derived `omega` is ignored.
    pub fn from_record<'a>(mut get: impl FnMut(&str) -> Option<&'a str>) -> Result<Self> {
        let mut num = |k: &str| -> Result<f64> {
            let v = get(k).ok_or_else(|| Error::MissingData(format!("barrier key `{k}`")))?;
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::OutOfRange(format!("barrier key `{k}` = `{v}`")))
        };
        let c = num("C")?;
        let a = num("a")?;
        let t_offset = num("T")?;
        let alpha = num("alpha")?;
        let beta = num("beta")?;
        let m = num("m")?;
        let p = num("p")?;
        let b = num("b")?;
        let k1 = num("k1")?;
        let k2 = num("k2")?;
        let n = num("N")? as u32;
        let family = Family::parse(get("family").ok_or_else(|| Error::MissingData("family".into()))?)?;
        Ok(Self {
            family,
            c,
            a,
            t_offset,
            alpha,
            beta,
            m,
            p,
            b,
            k1,
            k2,
            n,
        })
    }
}

/// Shortest decimal representation that parses back to the same float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// `K = c^{(m-1)/(p-1)} - c^{(p+m-2)/(p-1)}` with `c = (m-1)/(p+m-2)`.
pub fn k_constant(m: f64, p: f64) -> f64 {
    let c = (m - 1.0) / (p + m - 2.0);
    c.powf((m - 1.0) / (p - 1.0)) - c.powf((p + m - 2.0) / (p - 1.0))
}

/// Coefficients `sigma, delta, gamma` (outer region) and `sigma0, delta0`
/// (inner region) of the reduction `residual ~ C F^{1/(m-1)-1} phi(F)` with
/// `phi(F) = sigma F - delta - gamma F^{(p+m-2)/(m-1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub params: BarrierParams,
    pub k: f64,
}

impl CoefficientSet {
    fn common(&self, t: f64) -> Result<(TimeFactors, f64, f64, f64, f64)> {
        let p = &self.params;
        let tf = self.params.time_factors(t)?;
        let m = p.m;
        let head = tf.dzeta + tf.zeta / (m - 1.0) * tf.deta / tf.eta;
        let tail = tf.zeta / (m - 1.0) * tf.deta / tf.eta;
        let mm = m / (m - 1.0);
        Ok((tf, head, tail, mm, p.omega()))
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        let (tf, head, _, mm, w) = self.common(t)?;
        let p = &self.params;
        let k = match p.family {
            Family::Super => p.k1,
            Family::Sub | Family::Chain => p.k2,
        };
        let nb = p.n as f64 - 2.0 + p.b * mm;
        Ok(head + w * tf.zeta.powf(p.m) * mm * p.b * tf.eta * k * nb)
    }

    pub fn delta(&self, t: f64) -> Result<f64> {
        let (tf, _, tail, mm, w) = self.common(t)?;
        let p = &self.params;
        let k = match p.family {
            Family::Super => p.k2,
            Family::Sub | Family::Chain => p.k1,
        };
        Ok(tail + w * tf.zeta.powf(p.m) * mm / (p.m - 1.0) * p.b * p.b * tf.eta * k)
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if !p.family.has_reaction() {
            return Ok(0.0);
        }
        let tf = p.time_factors(t)?;
        Ok(p.c.powf(p.p - 1.0) * tf.zeta.powf(p.p))
    }

    pub fn sigma0(&self, t: f64) -> Result<f64> {
        let (tf, head, _, mm, w) = self.common(t)?;
        let p = &self.params;
        let nf = p.n as f64;
        let zm = tf.zeta.powf(p.m);
        Ok(match p.family {
            Family::Super => head + w * zm * mm * nf * p.b * p.k1 * tf.eta,
            Family::Sub => head + 2.0 * w * zm * mm * (nf + 2.0 / (p.m - 1.0)) * p.k2 * tf.eta,
            Family::Chain => head + p.b * p.k2 * w * zm * mm * (nf + 2.0 / (p.m - 1.0)) * tf.eta,
        })
    }

    pub fn delta0(&self, t: f64) -> Result<f64> {
        let (tf, _, tail, mm, w) = self.common(t)?;
        let p = &self.params;
        let zm = tf.zeta.powf(p.m);
        let mm2 = mm / (p.m - 1.0);
        Ok(match p.family {
            Family::Super => tail + w * p.b * p.b * p.k2 * zm * mm2 * tf.eta * tf.eta / p.a,
            Family::Sub => tail + 4.0 * w * p.k1 * zm * mm2 * tf.eta,
            Family::Chain => {
                tail + 2.0 * p.k1 * p.b * w * mm2 * zm * tf.eta
                    - (2.0 - p.b) * p.k2 * p.b * w / p.a * mm2 * zm * tf.eta * tf.eta
            }
        })
    }

    /// `phi(F) = sigma F - delta - gamma F^{(p+m-2)/(m-1)}` for given coefficients.
    pub fn phi(&self, sigma: f64, delta: f64, gamma: f64, f: f64) -> f64 {
        let p = &self.params;
        sigma * f - delta - gamma * f.powf((p.p + p.m - 2.0) / (p.m - 1.0))
    }

    /// Stationary point `F0 = [(m-1)/(p+m-2) sigma/gamma]^{(m-1)/(p-1)}` of `phi`.
    pub fn f0(&self, sigma: f64, gamma: f64) -> f64 {
        let p = &self.params;
        ((p.m - 1.0) / (p.p + p.m - 2.0) * sigma / gamma).powf((p.m - 1.0) / (p.p - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn super_params() -> BarrierParams {
        BarrierParams {
            family: Family::Super,
            c: 0.3,
            a: 2.0,
            t_offset: 5.0,
            alpha: 0.7,
            beta: 0.3,
            m: 2.0,
            p: 3.0,
            b: 2.0,
            k1: 1.0,
            k2: 1.0,
            n: 3,
        }
    }

    #[test]
    fn shape_examples() {
        assert_eq!(shape_r(1.0, 1.5), 1.0);
        assert!((shape_r(1.0 - 1e-15, 1.5) - 1.0).abs() < 1e-14);
        assert_eq!(shape_r(0.0, 2.0), 0.0);
        assert_eq!(shape_r(2.0, 1.0), 2.0);
        assert_eq!(shape_s(1.0, 0.5), 1.0);
        assert_eq!(shape_s(0.5, 2.0), 0.25);
        assert_eq!(shape_s(4.0, 1.0), 4.0);
    }

    #[test]
    fn k_examples() {
        assert!((k_constant(2.0, 2.0) - 0.25).abs() < 1e-15);
        let c = 1.0f64 / 3.0;
        let want = c.powf(0.5) - c.powf(1.5);
        assert!((k_constant(2.0, 3.0) - want).abs() < 1e-15);
        assert!((k_constant(2.0, 3.0) - 0.3849).abs() < 1e-4);
    }

    #[test]
    fn super_value_at_origin() {
        let p = super_params();
        let v = p.eval(0.0, 0.0).unwrap();
        assert!((v - p.c * p.t_offset.powf(-p.alpha)).abs() < 1e-15);
        // far outside the support
        assert_eq!(p.eval(50.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sub_domain_error() {
        let mut p = super_params();
        p.family = Family::Sub;
        p.alpha = 0.5;
        p.beta = -0.5;
        assert!(matches!(p.eval(0.5, 5.0), Err(Error::DomainError(_))));
        let l = p.eval_side(1.0, 1.0, Side::Inner).unwrap();
        let r = p.eval_side(1.0, 1.0, Side::Outer).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn gamma_sub_closed_form() {
        let p = BarrierParams {
            family: Family::Sub,
            c: 2.0,
            a: 3.0,
            t_offset: 1.0,
            alpha: 1.0 / 2.0,
            beta: (2.0 - 3.0) / 2.0,
            m: 2.0,
            p: 3.0,
            b: 2.0,
            k1: 1.0,
            k2: 1.0,
            n: 3,
        };
        let g = p.coefficients().gamma(0.4).unwrap();
        let want = 2f64.powf(2.0) * (0.6f64).powf(-3.0 / 2.0);
        assert!((g - want).abs() < 1e-12 * want);
    }

    #[test]
    fn record_round_trip() {
        let p = super_params();
        let rec = p.to_record();
        let back = BarrierParams::from_record(|k| {
            rec.iter().find(|(kk, _)| *kk == k).map(|(_, v)| v.as_str())
        })
        .unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn support_radius_matches_positivity() {
        let p = super_params();
        let rs = p.support_radius(1.0).unwrap();
        assert!(p.eval(rs * 0.999, 1.0).unwrap() > 0.0);
        assert_eq!(p.eval(rs * 1.001, 1.0).unwrap(), 0.0);
    }
}
