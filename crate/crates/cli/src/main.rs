use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pme_cli::config::{num, ExperimentConfig, Scenario};
use pme_cli::error::{CliError, CliResult};
use pme_cli::experiments::{self, ParamsKind};
use pme_cli::{output, plots};
use pme_core::density::{certify_bounds, default_probe};
use pme_core::exponents::classify_regime;
use pme_core::residual::{default_time_probe, phi_endpoint_check, verify_gluing};
use pme_core::{DensityKind, Family};

/// Worst accepted closed-form vs finite-difference discrepancy.
const FD_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "pme", version, about = "Weighted porous medium equation with a power source")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    m: Option<String>,
    /// One exponent or a comma-separated list; fractions allowed.
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "N")]
    n: Option<u32>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical exponents and regime of each `p`.
    Regimes(Common),
    /// Solve one parameter system and print its condition report.
    Params {
        #[arg(value_enum)]
        kind: KindArg,
        #[command(flatten)]
        common: Common,
    },
    /// Certificate checks.
    Verify {
        #[arg(value_enum)]
        what: VerifyArg,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate one initial datum.
    Simulate(Common),
    /// Small and large data for every `p`.
    Dichotomy(Common),
    /// Chaining experiment below a bump datum.
    Chain(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Global,
    Blowup,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Residual,
    Gluing,
    Phi,
    Density,
    Fd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Super,
    Sub,
    Chain,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Super => Family::Super,
            FamilyArg::Sub => Family::Sub,
            FamilyArg::Chain => Family::Chain,
        }
    }
}

fn load(common: &Common, scenario: Scenario) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
        None => ExperimentConfig {
            scenario,
            ..ExperimentConfig::default()
        },
    };
    if let Some(m) = &common.m {
        cfg.m = num("m", m)?;
    }
    if let Some(p) = &common.p {
        cfg.p = ExperimentConfig::parse(&format!("p = {p}"))?.p;
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(q) = &common.q {
        cfg.q = num("q", q)?;
    }
    if let Some(d) = &common.density {
        cfg.density = DensityKind::parse(d)?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

/// Print `text` and also write it to `out/name` when an output directory is set.
fn emit(cfg: &ExperimentConfig, name: &str, text: &str) -> CliResult<()> {
    print!("{text}");
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig) -> Option<&Path> {
    cfg.out.as_deref()
}

fn regimes(common: &Common) -> CliResult<()> {
    let cfg = load(common, Scenario::Regimes)?;
    let d = cfg.density_model()?;
    let rows = cfg
        .p
        .iter()
        .map(|&p| Ok((p, classify_regime(&cfg.spec(p)?))))
        .collect::<CliResult<Vec<_>>>()?;
    emit(&cfg, "regimes.csv", &output::regimes_table(&rows, cfg.m, cfg.n, d.k1, d.k2)?)
}

fn params(kind: KindArg, common: &Common) -> CliResult<()> {
    let cfg = load(common, Scenario::Params)?;
    let kind = match kind {
        KindArg::Global => ParamsKind::Global,
        KindArg::Blowup => ParamsKind::Blowup,
        KindArg::Chain => ParamsKind::Chain,
    };
    let (params, rep) = experiments::run_params(&cfg, kind)?;
    let mut text = String::from("key,value\n");
    for (k, v) in params.to_record() {
        text.push_str(&format!("{k},{v}\n"));
    }
    text.push('\n');
    text.push_str(&output::conditions_table(&[(params.family.as_str(), &rep)])?);
    emit(&cfg, "params.csv", &text)?;
    if !rep.all_satisfied {
        let bad: Vec<_> = rep.failures().iter().map(|e| e.label.clone()).collect();
        return Err(CliError::Verification(format!("unsatisfied: {}", bad.join(", "))));
    }
    Ok(())
}

fn verify(what: VerifyArg, family: Option<FamilyArg>, common: &Common) -> CliResult<()> {
    let mut cfg = load(common, Scenario::Residual)?;
    if let Some(f) = family {
        cfg.family = f.into();
    }
    match what {
        VerifyArg::Residual => {
            let s = experiments::run_residual(&cfg)?;
            let (lo, _) = s.field.min_relative();
            let (hi, _) = s.field.max_relative();
            println!("family,min_residual,max_residual,worst_r,worst_t,gluing,phi,pass");
            println!(
                "{},{lo:e},{hi:e},{:e},{:e},{},{},{}",
                s.family.as_str(),
                s.worst.0,
                s.worst.1,
                s.gluing.all_satisfied,
                s.phi.all_satisfied,
                s.passes()
            );
            if let Some(dir) = out_dir(&cfg) {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("residual.csv"), output::residual_table(&s.field)?)?;
            }
            if !s.passes() {
                return Err(CliError::Verification(format!(
                    "{} residual certificate (extreme {:e})",
                    s.family.as_str(),
                    s.extreme
                )));
            }
        }
        VerifyArg::Gluing | VerifyArg::Phi => {
            let params = experiments::barrier_for(&cfg)?;
            let probe = default_time_probe(&params, 50);
            let (name, rep) = match what {
                VerifyArg::Gluing => ("gluing.csv", verify_gluing(&params, &probe)?),
                _ => ("phi.csv", phi_endpoint_check(&params, &probe)?),
            };
            emit(&cfg, name, &output::conditions_table(&[(params.family.as_str(), &rep)])?)?;
            if !rep.all_satisfied {
                return Err(CliError::Verification(format!("{} failed", rep.system.as_str())));
            }
        }
        VerifyArg::Density => {
            let rep = certify_bounds(&cfg.density_model()?, &default_probe())?;
            emit(&cfg, "density.csv", &output::conditions_table(&[("density", &rep)])?)?;
            if !rep.all_satisfied {
                return Err(CliError::Verification("density bounds".into()));
            }
        }
        VerifyArg::Fd => {
            let params = experiments::barrier_for(&cfg)?;
            let spec = cfg.spec(cfg.p0())?;
            let c = experiments::fd_check(&params, &spec, 100, cfg.seed)?;
            emit(
                &cfg,
                "fd.csv",
                &format!(
                    "family,nodes,max_rel_error,worst_r,worst_t,pass\n{},{},{:e},{:e},{:e},{}\n",
                    c.family.as_str(),
                    c.nodes,
                    c.max_rel_error,
                    c.worst.0,
                    c.worst.1,
                    c.max_rel_error <= FD_TOL
                ),
            )?;
            if !(c.max_rel_error <= FD_TOL) {
                return Err(CliError::Verification(format!(
                    "finite differences disagree by {:e}",
                    c.max_rel_error
                )));
            }
        }
    }
    Ok(())
}

fn simulate(common: &Common) -> CliResult<()> {
    let cfg = load(common, Scenario::Simulate)?;
    let out = experiments::run_simulation(&cfg)?;
    print!("{}", output::summary_text(&out));
    if let Some(dir) = out_dir(&cfg) {
        output::write_simulation(dir, &out)?;
        let overlay = match &out.data {
            experiments::InitialData::Barrier { params, .. } => Some(params),
            _ => None,
        };
        plots::emit_plots(dir, &out.solution, overlay)?;
    }
    if let Some(c) = &out.comparison {
        if !c.pass {
            return Err(CliError::Verification(format!(
                "ordering against the barrier violated by {:e}",
                c.max_violation
            )));
        }
    }
    Ok(())
}

fn dichotomy(common: &Common) -> CliResult<()> {
    let cfg = load(common, Scenario::Dichotomy)?;
    let rows = experiments::run_dichotomy(&cfg)?;
    emit(&cfg, "dichotomy.csv", &output::dichotomy_table(&rows)?)
}

fn chain(common: &Common) -> CliResult<()> {
    let cfg = load(common, Scenario::Chain)?;
    let rep = experiments::run_chain(&cfg)?;
    emit(&cfg, "chain.csv", &output::chain_table(&rep)?)?;
    if let Some(dir) = out_dir(&cfg) {
        fs::write(
            dir.join("conditions.csv"),
            output::conditions_table(&[("chain", &rep.conditions)])?,
        )?;
        output::write_trajectory(&dir.join("trajectory.csv"), &rep.solution)?;
        plots::emit_plots(dir, &rep.solution, Some(&rep.chain.barrier))?;
    }
    rep.verify()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Regimes(c) => regimes(&c),
        Cmd::Params { kind, common } => params(kind, &common),
        Cmd::Verify {
            what,
            family,
            common,
        } => verify(what, family, &common),
        Cmd::Simulate(c) => simulate(&c),
        Cmd::Dichotomy(c) => dichotomy(&c),
        Cmd::Chain(c) => chain(&c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
