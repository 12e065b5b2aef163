//! Comma-delimited tables with a header row.

use std::fs;
use std::path::Path;

use pme_core::barriers::fmt_f64;
use pme_core::exponents::RegimeClassification;
use pme_core::{ConditionReport, RadialSolution, ResidualField};

use crate::error::CliResult;
use crate::experiments::{ChainReport, DichotomyRow, SimulationOutput};

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_trajectory(path: &Path, sol: &RadialSolution) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "sup_norm", "weighted_mass", "support_radius"])?;
    for r in &sol.trajectory {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.sup_norm),
            fmt_f64(r.weighted_mass),
            fmt_f64(r.support_radius),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per sample and cell.
pub fn write_profiles(path: &Path, sol: &RadialSolution) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "r", "u"])?;
    for (t, prof) in sol.times.iter().zip(&sol.profiles) {
        for (r, u) in sol.grid.centers.iter().zip(prof) {
            w.write_record([fmt_f64(*t), fmt_f64(*r), fmt_f64(*u)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_events(path: &Path, sol: &RadialSolution) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "t", "value"])?;
    for e in &sol.events {
        w.write_record([e.kind.as_str().to_string(), fmt_f64(e.t), fmt_f64(e.value)])?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` summary of a run.
pub fn summary_text(out: &SimulationOutput) -> String {
    let sol = &out.solution;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    kv("status", sol.status.as_str().to_string());
    kv("blowup_time", opt(sol.blowup_time));
    kv("final_time", fmt_f64(sol.final_time));
    kv("horizon", fmt_f64(out.horizon));
    kv("steps", sol.steps.to_string());
    kv("initial_datum", out.data.label().to_string());
    kv(
        "max_sup_norm",
        fmt_f64(sol.trajectory.iter().map(|r| r.sup_norm).fold(0.0, f64::max)),
    );
    kv("boundary_touched", sol.boundary_touched.to_string());
    if let Some(c) = &out.comparison {
        kv("comparison_max_violation", fmt_f64(c.max_violation));
        kv("comparison_pass", c.pass.to_string());
    }
    s
}

/// `trajectory.csv`, `profiles.csv`, `events.csv` and `summary.txt`.
pub fn write_simulation(dir: &Path, out: &SimulationOutput) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_trajectory(&dir.join("trajectory.csv"), &out.solution)?;
    write_profiles(&dir.join("profiles.csv"), &out.solution)?;
    write_events(&dir.join("events.csv"), &out.solution)?;
    fs::write(dir.join("summary.txt"), summary_text(out))?;
    Ok(())
}

pub fn regimes_table(rows: &[(f64, RegimeClassification)], m: f64, n: u32, k1: f64, k2: f64) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m", "N", "b", "k1", "k2", "p", "p_bar", "p_under", "admissibility_margin", "regime", "eps_required",
    ])?;
    for (p, c) in rows {
        w.write_record([
            fmt_f64(m),
            n.to_string(),
            fmt_f64(c.b),
            fmt_f64(k1),
            fmt_f64(k2),
            fmt_f64(*p),
            opt(c.p_bar),
            opt(c.p_under),
            fmt_f64(c.admissibility_margin),
            c.regime.as_str().to_string(),
            opt(c.eps_required),
        ])?;
    }
    into_string(w)
}

pub fn conditions_table(reports: &[(&str, &ConditionReport)]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["barrier", "system", "label", "lhs", "rhs", "satisfied", "margin"])?;
    for (name, rep) in reports {
        for e in &rep.entries {
            w.write_record([
                name.to_string(),
                rep.system.as_str().to_string(),
                e.label.clone(),
                fmt_f64(e.lhs),
                fmt_f64(e.rhs),
                e.satisfied.to_string(),
                fmt_f64(e.margin),
            ])?;
        }
    }
    into_string(w)
}

pub fn residual_table(field: &ResidualField) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "t", "region", "residual"])?;
    for (r, t, reg, v) in field.rows() {
        w.write_record([fmt_f64(r), fmt_f64(t), reg.as_str().to_string(), fmt_f64(v)])?;
    }
    into_string(w)
}

pub fn dichotomy_table(rows: &[DichotomyRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "p",
        "regime",
        "small_datum",
        "small_status",
        "small_blowup_time",
        "small_violation",
        "large_status",
        "large_blowup_time",
    ])?;
    for r in rows {
        w.write_record([
            fmt_f64(r.p),
            r.regime.as_str().to_string(),
            r.small_datum.to_string(),
            r.small_status.as_str().to_string(),
            opt(r.small_blowup_time),
            opt(r.small_violation),
            r.large_status.as_str().to_string(),
            opt(r.large_blowup_time),
        ])?;
    }
    into_string(w)
}

pub fn chain_table(rep: &ChainReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value", "r", "t"])?;
    let ch = &rep.chain;
    for (k, v) in [
        ("C1", ch.c1()),
        ("a1", ch.a1()),
        ("T1", ch.t1_offset()),
        ("alpha_bar", ch.alpha_bar()),
        ("beta_bar", ch.beta_bar()),
        ("omega1", ch.omega1()),
        ("eps0", ch.eps0),
        ("eps", ch.eps),
        ("t1", ch.t1),
        ("T", ch.t_sub()),
        ("t1_plus_T", rep.window),
    ] {
        w.write_record([k.to_string(), fmt_f64(v), String::new(), String::new()])?;
    }
    for l in &rep.links {
        w.write_record([
            format!("link {}", l.label),
            fmt_f64(l.margin),
            fmt_f64(l.at.0),
            fmt_f64(l.at.1),
        ])?;
    }
    w.write_record([
        "status".to_string(),
        rep.solution.status.as_str().to_string(),
        String::new(),
        String::new(),
    ])?;
    w.write_record([
        "blowup_time".to_string(),
        opt(rep.solution.blowup_time),
        String::new(),
        String::new(),
    ])?;
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
