use std::fs;
use std::process::Command;

use pme_cli::config::ExperimentConfig;
use pme_cli::error::CliError;
use pme_cli::experiments::{run_chain, run_params, ParamsKind};
use pme_cli::plots::emit_plots;
use pme_core::solver::{evolve, RadialGrid, SolverConfig};
use pme_core::{DensityModel, Error, ProblemSpec};

fn pme(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pme")).args(args).output().unwrap()
}

#[test]
fn config_display_round_trips() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/chain.cfg")).unwrap();
    let cfg = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(ExperimentConfig::parse(&cfg.to_string()).unwrap(), cfg);
}

#[test]
fn unknown_config_key_is_rejected() {
    assert!(matches!(ExperimentConfig::parse("colour = red"), Err(CliError::Config(_))));
}

#[test]
fn exit_codes() {
    assert_eq!(pme(&["regimes", "--m", "2", "--p", "3/2,2,3", "--N", "3"]).status.code(), Some(0));
    // p = 2 lies below p_bar = 8/3 for m = 2, N = 3
    assert_eq!(pme(&["params", "global", "--m", "2", "--p", "2", "--N", "3"]).status.code(), Some(2));
    assert_eq!(pme(&["params", "global", "--m", "2", "--p", "3", "--N", "3"]).status.code(), Some(0));
}

#[test]
fn tables_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = pme(&[
            "verify", "fd", "--family", "sub", "--m", "2", "--p", "3", "--N", "3", "--q", "0.5", "--seed", "7",
            "--out", dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("fd.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn params_agree_between_library_and_binary() {
    let cfg = ExperimentConfig {
        m: 2.0,
        p: vec![3.0],
        n: 3,
        ..ExperimentConfig::default()
    };
    let (params, rep) = run_params(&cfg, ParamsKind::Global).unwrap();
    assert!(rep.all_satisfied);
    let out = pme(&["params", "global", "--m", "2", "--p", "3", "--N", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for (k, v) in params.to_record() {
        assert!(text.contains(&format!("{k},{v}\n")), "{k}");
    }
}

#[test]
fn plots_need_a_trajectory() {
    let spec = ProblemSpec::new(2.0, 2.0, 3, DensityModel::constant()).unwrap();
    let grid = RadialGrid::new(3, 2.0, 40).unwrap();
    let u0 = grid.sample(|r| (1.0 - r * r).max(0.0));
    let mut sol = evolve(&spec, grid, &u0, 0.01, SolverConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emit_plots(dir.path(), &sol, None).unwrap().len(), 3);
    sol.trajectory.clear();
    assert!(matches!(emit_plots(dir.path(), &sol, None), Err(CliError::Core(Error::MissingData(_)))));
}

fn chain_cfg() -> ExperimentConfig {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/chain.cfg")).unwrap();
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn chain_rejects_vanishing_data() {
    let cfg = ExperimentConfig {
        u0_amplitude: 0.0,
        ..chain_cfg()
    };
    assert!(matches!(run_chain(&cfg), Err(CliError::Core(Error::InvalidInitialData(_)))));
}

#[test]
fn chain_is_infeasible_above_p_under() {
    let cfg = ExperimentConfig {
        p: vec![2.9],
        ..chain_cfg()
    };
    let e = run_chain(&cfg).unwrap_err();
    assert!(matches!(e, CliError::Core(Error::Infeasible(_))), "{e}");
    assert_eq!(e.exit_code(), 2);
}
