use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use grf_core::geometry::{closedness_residual, TOL_CLOSED};
use grf_lab::presets::{endpoint_profiles, initial_state};
use grf_lab::report::{REPORT_FILE, CONTAINER_FILE};
use grf_lab::{generate_random_scenario, Kind, Report, Scenario, Verdict};

const FLAT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/flat-verify.toml");
const HOMOGENEOUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/homogeneous-t3.toml");

fn grflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grflab")).args(args).output().unwrap()
}

fn run_into(config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    grflab(&args)
}

#[test]
fn flat_fixed_point_verifies_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(FLAT, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = Report::load(dir.path()).unwrap();
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, grf_lab::experiment::VERIFY_ALL);
    for c in &report.checks {
        assert!(c.residual <= 1e-12, "{c:?}");
        assert_eq!(c.verdict, Verdict::Pass);
    }
    assert_eq!(report.convention, "full-sum");
    assert!(dir.path().join(CONTAINER_FILE).exists());
}

#[test]
fn homogeneous_simulation_matches_the_reduced_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(HOMOGENEOUS, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = Report::load(dir.path()).unwrap();
    let oracle = report.checks.iter().find(|c| c.name == "homogeneous-oracle").unwrap();
    assert!(oracle.residual <= 1e-6, "{oracle:?}");
    let csv = fs::read_to_string(dir.path().join("reduced-ode-a.csv")).unwrap();
    assert!(csv.starts_with("t,value,residual\n"));
    assert_eq!(csv.lines().count(), 1 + 101);
}

#[test]
fn missing_mesh_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[preset]\nname = \"flat-fixed-point\"\n\n[flow]\nhorizon = 0.1\n\n[experiment]\nkind = \"simulate\"\n")
        .unwrap();
    let out = run_into(cfg.to_str().unwrap(), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_overrides_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (ov, key) in [("mesh.n=12", "mesh"), ("tolerances.geo=-1", "tolerances.geo"), ("mesh.m=3", "m")] {
        let out = run_into(FLAT, dir.path(), &["--override", ov]);
        assert_eq!(out.status.code(), Some(1), "{ov}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(key), "{ov}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn overrides_and_seed_reach_the_scenario() {
    let text = fs::read_to_string(FLAT).unwrap();
    let sc = Scenario::parse(&text, &["mesh.n=32".into(), "experiment.kind=\"simulate\"".into(), "flow.dt=0.001".into()])
        .unwrap();
    assert_eq!(sc.mesh.n, 32);
    assert_eq!(sc.experiment.kind, Kind::Simulate);
    assert_eq!(sc.flow.dt, Some(0.001));

    let dir = tempfile::tempdir().unwrap();
    let out = run_into(FLAT, dir.path(), &["--seed", "99", "--override", "experiment.kind=\"simulate\""]);
    assert_eq!(out.status.code(), Some(0));
    let report = Report::load(dir.path()).unwrap();
    assert_eq!(report.scenario.experiment.seed, 99);
    assert_eq!(report.scenario.experiment.kind, Kind::Simulate);
}

#[test]
fn report_subcommand_replays_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into(FLAT, dir.path(), &[]).status.code(), Some(0));
    let out = grflab(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("W-monotonicity") && text.contains("full-sum"), "{text}");

    // A failed verdict recorded in the report sets exit code 1.
    let path = dir.path().join(REPORT_FILE);
    let json = fs::read_to_string(&path).unwrap().replacen("\"verdict\": \"pass\"", "\"verdict\": \"fail\"", 1);
    fs::write(&path, json).unwrap();
    assert_eq!(grflab(&["report", dir.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_into(FLAT, a.path(), &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run_into(FLAT, b.path(), &["--threads", "2"]).status.code(), Some(0));
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn random_scenarios_are_deterministic() {
    for seed in [0, 1, u64::MAX] {
        assert_eq!(generate_random_scenario(seed, Kind::CostMono), generate_random_scenario(seed, Kind::CostMono));
    }
    assert_ne!(generate_random_scenario(1, Kind::FMono), generate_random_scenario(2, Kind::FMono));
}

#[test]
fn random_scenarios_are_admissible() {
    for seed in 0..100 {
        let sc = generate_random_scenario(seed, Kind::VerifyAll);
        sc.validate().unwrap();
        for m in sc.preset.u.iter().chain(&sc.preset.f).chain(&sc.preset.h) {
            assert!(m.cos.abs() <= 0.2 && m.sin.abs() <= 0.2, "seed {seed}: {m:?}");
        }
        let s = initial_state(&sc).unwrap();
        assert!(s.g.min_eigenvalue() >= 0.5, "seed {seed}: {}", s.g.min_eigenvalue());
        assert!(closedness_residual(&s.h) <= TOL_CLOSED, "seed {seed}");
        let (r1, r2) = endpoint_profiles(&sc).unwrap();
        assert!(r1.min() >= 0.5 && r2.min() >= 0.5, "seed {seed}");
    }
}

#[test]
fn scenario_round_trips_through_toml() {
    let sc = generate_random_scenario(5, Kind::Geodesic);
    assert_eq!(Scenario::parse(&sc.to_toml(), &[]).unwrap(), sc);
}
