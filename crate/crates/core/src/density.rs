//! Radial density models and certification of their two-sided bounds.
//!
//! Every model carries constants `(q, k1, k2, rho1, rho2)` with
//! `k1 r^q <= 1/rho(r) <= k2 r^q` for `r >= 1` and `rho1 <= 1/rho(r) <= rho2`
//! on the unit ball. The barrier constructions use the convention
//! `k1 = rho1`, `k2 = rho2`.

use std::fmt;
use std::sync::Arc;

use crate::conditions::{ConditionEntry, ConditionReport, SystemKind};
use crate::error::{Error, Result};

/// Relative slack used when comparing probed values against the constants.
const CERTIFY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `1` on the unit ball, `r^-q` outside.
    PowerTail,
    /// `(1 + r)^-q`.
    ShiftedPower,
    /// `rho == 1`.
    Constant,
    /// User supplied radial function with asserted constants.
    Custom,
}

impl DensityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityKind::PowerTail => "power-tail",
            DensityKind::ShiftedPower => "shifted-power",
            DensityKind::Constant => "constant",
            DensityKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "power-tail" => Ok(DensityKind::PowerTail),
            "shifted-power" => Ok(DensityKind::ShiftedPower),
            "constant" => Ok(DensityKind::Constant),
            "custom" => Ok(DensityKind::Custom),
            other => Err(Error::OutOfRange(format!("unknown density kind `{other}`"))),
        }
    }
}

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct DensityModel {
    pub kind: DensityKind,
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    pub rho1: f64,
    pub rho2: f64,
    custom: Option<RadialFn>,
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel")
            .field("kind", &self.kind)
            .field("q", &self.q)
            .field("k1", &self.k1)
            .field("k2", &self.k2)
            .field("rho1", &self.rho1)
            .field("rho2", &self.rho2)
            .finish()
    }
}

impl PartialEq for DensityModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.q == other.q
            && self.k1 == other.k1
            && self.k2 == other.k2
            && self.rho1 == other.rho1
            && self.rho2 == other.rho2
            && self.custom.is_none()
            && other.custom.is_none()
    }
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..2.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("q = {q} is not in [0, 2)")))
    }
}

impl DensityModel {
    /// `rho = 1` on `r <= 1` and `r^-q` outside; certified with all constants equal to 1.
    pub fn power_tail(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(Self {
            kind: DensityKind::PowerTail,
            q,
            k1: 1.0,
            k2: 1.0,
            rho1: 1.0,
            rho2: 1.0,
            custom: None,
        })
    }

    /// `rho = (1 + r)^-q`; certified with `k1 = rho1 = 1`, `k2 = rho2 = 2^q`.
    pub fn shifted_power(q: f64) -> Result<Self> {
        check_q(q)?;
        let top = 2f64.powf(q);
        Ok(Self {
            kind: DensityKind::ShiftedPower,
            q,
            k1: 1.0,
            k2: top,
            rho1: 1.0,
            rho2: top,
            custom: None,
        })
    }

    pub fn constant() -> Self {
        Self {
            kind: DensityKind::Constant,
            q: 0.0,
            k1: 1.0,
            k2: 1.0,
            rho1: 1.0,
            rho2: 1.0,
            custom: None,
        }
    }

    /// A radial density with user-asserted constants; [`certify_bounds`] is the runtime guard.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        q: f64,
        k1: f64,
        k2: f64,
        rho1: f64,
        rho2: f64,
    ) -> Result<Self> {
        check_q(q)?;
        let m = Self {
            kind: DensityKind::Custom,
            q,
            k1,
            k2,
            rho1,
            rho2,
            custom: Some(Arc::new(f)),
        };
        m.validate()?;
        Ok(m)
    }

    /// Build a model of the given kind by name, as used in configuration files.
    pub fn from_kind(kind: DensityKind, q: f64) -> Result<Self> {
        match kind {
            DensityKind::PowerTail => Self::power_tail(q),
            DensityKind::ShiftedPower => Self::shifted_power(q),
            DensityKind::Constant => {
                if q != 0.0 {
                    return Err(Error::OutOfRange("constant density requires q = 0".into()));
                }
                Ok(Self::constant())
            }
            DensityKind::Custom => Err(Error::OutOfRange(
                "custom densities cannot be built from a kind name".into(),
            )),
        }
    }

    /// Replace the asserted constants, keeping the radial profile.
    pub fn with_constants(mut self, k1: f64, k2: f64, rho1: f64, rho2: f64) -> Result<Self> {
        self.k1 = k1;
        self.k2 = k2;
        self.rho1 = rho1;
        self.rho2 = rho2;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.k1 > 0.0 && self.k1 <= self.k2 && self.rho1 > 0.0 && self.rho1 <= self.rho2;
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "density constants must satisfy 0 < k1 <= k2 and 0 < rho1 <= rho2, got {self:?}"
            )))
        }
    }

    /// `b = 2 - q`.
    pub fn b(&self) -> f64 {
        2.0 - self.q
    }

    /// Density at radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            DensityKind::PowerTail => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-self.q)
                }
            }
            DensityKind::ShiftedPower => (1.0 + r).powf(-self.q),
            DensityKind::Constant => 1.0,
            DensityKind::Custom => (self.custom.as_ref().expect("custom profile"))(r),
        }
    }
}

/// Density at radius `r`.
pub fn eval_density(model: &DensityModel, r: f64) -> f64 {
    model.eval(r)
}

/// 512 log-spaced radii on `[1e-3, 1e3]` plus both sides of the matching radius.
pub fn default_probe() -> Vec<f64> {
    log_probe(1e-3, 1e3, 512)
}

pub fn log_probe(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    v.push(1.0 - 1e-12);
    v.push(1.0);
    v.push(1.0 + 1e-12);
    v.sort_by(f64::total_cmp);
    v
}

/// Check `rho1 <= 1/rho <= rho2` on probes `r <= 1` and `k1 <= r^-q / rho <= k2` on
/// probes `r >= 1`. Each entry records the extreme value and the radius where it occurs.
pub fn certify_bounds(model: &DensityModel, probe: &[f64]) -> Result<ConditionReport> {
    if probe.is_empty() {
        return Err(Error::EmptyProbe);
    }
    let mut inner: Option<((f64, f64), (f64, f64))> = None;
    let mut outer: Option<((f64, f64), (f64, f64))> = None;
    for &r in probe {
        let inv = 1.0 / model.eval(r);
        let track = |slot: &mut Option<((f64, f64), (f64, f64))>, v: f64| {
            let e = slot.get_or_insert(((v, r), (v, r)));
            if v < e.0 .0 {
                e.0 = (v, r);
            }
            if v > e.1 .0 {
                e.1 = (v, r);
            }
        };
        if r <= 1.0 {
            track(&mut inner, inv);
        }
        if r >= 1.0 {
            track(&mut outer, inv * r.powf(-model.q));
        }
    }
    let mut entries = Vec::new();
    let slack = |c: f64| c * CERTIFY_SLACK;
    if let Some(((lo, rlo), (hi, rhi))) = inner {
        entries.push(ConditionEntry::ge_slack(
            format!("inner_lower@r={rlo:.6e}"),
            lo,
            model.rho1,
            slack(model.rho1),
        ));
        entries.push(ConditionEntry::le_slack(
            format!("inner_upper@r={rhi:.6e}"),
            hi,
            model.rho2,
            slack(model.rho2),
        ));
    }
    if let Some(((lo, rlo), (hi, rhi))) = outer {
        entries.push(ConditionEntry::ge_slack(
            format!("tail_lower@r={rlo:.6e}"),
            lo,
            model.k1,
            slack(model.k1),
        ));
        entries.push(ConditionEntry::le_slack(
            format!("tail_upper@r={rhi:.6e}"),
            hi,
            model.k2,
            slack(model.k2),
        ));
    }
    Ok(ConditionReport::new(SystemKind::DensityBounds, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_density(&DensityModel::constant(), 5.0), 1.0);
        assert_eq!(eval_density(&DensityModel::power_tail(1.0).unwrap(), 1.0), 1.0);
        let sp = DensityModel::shifted_power(1.0).unwrap();
        assert!((eval_density(&sp, 3.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn power_tail_is_continuous_at_one() {
        for q in [0.1, 0.7, 1.5, 1.99] {
            let d = DensityModel::power_tail(q).unwrap();
            let l = d.eval(1.0 - 1e-14);
            let r = d.eval(1.0 + 1e-14);
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn certify_examples() {
        let d = DensityModel::power_tail(1.0).unwrap();
        let probe = log_probe(1e-3, 100.0, 256);
        assert!(certify_bounds(&d, &probe).unwrap().all_satisfied);

        let sp = DensityModel::shifted_power(1.0).unwrap();
        assert_eq!(sp.k2, 2.0);
        assert!(certify_bounds(&sp, &probe).unwrap().all_satisfied);

        let tight = sp.with_constants(1.0, 1.5, 1.0, 2.0).unwrap();
        let mut probe = probe.clone();
        probe.push(10.0);
        let rep = certify_bounds(&tight, &probe).unwrap();
        assert!(!rep.all_satisfied);
        let bad = rep.entries.iter().find(|e| !e.satisfied).unwrap();
        assert!(bad.label.starts_with("tail_upper@r=1.0"), "{}", bad.label);
    }

    #[test]
    fn empty_probe_is_rejected() {
        assert_eq!(
            certify_bounds(&DensityModel::constant(), &[]).unwrap_err(),
            Error::EmptyProbe
        );
    }

    #[test]
    fn q_range_is_enforced() {
        assert!(DensityModel::power_tail(2.0).is_err());
        assert!(DensityModel::shifted_power(-0.1).is_err());
    }
}
