use std::process::Command;

use pmfront_cli::config::{ExperimentConfig, Scenario};
use pmfront_cli::plot::emit_plots;
use pmfront_cli::scenarios::{criteria_for, run_scenario};
use pmfront_cli::sweep::{run_sweep, sweep_csv};
use serde_json::json;

/// Small grids and short horizons so every pipeline runs in well under a second.
fn quick(s: Scenario) -> ExperimentConfig {
    let overrides = match s {
        Scenario::Thm1OneD | Scenario::Thm5Fbp1 => json!({"n_cells": 64, "run": {"t_end": 0.02}}),
        Scenario::Thm2Radial | Scenario::Thm3Nonexistence => json!({"n_cells": 80, "run": {"t_end": 0.02, "snapshot_dt": 0.01}}),
        Scenario::Thm6Fbp2 | Scenario::BarrierVerify2 => json!({"n_cells": 120, "barrier": {"t_star": 0.02}}),
        Scenario::BarrierVerify1 => json!({"n_cells": 100, "run": {"t_end": 0.05}}),
        Scenario::Counterexample => json!({"counterexample": {"patch_n": 16}}),
    };
    let mut v = overrides;
    v["scenario"] = json!(s.name());
    ExperimentConfig::from_value(&v).unwrap()
}

#[test]
fn every_report_lists_exactly_its_registered_criteria() {
    for s in Scenario::ALL {
        let r = run_scenario(&quick(s), None).unwrap();
        let names: Vec<&str> = r.criteria.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, criteria_for(s), "{}", s.name());
        assert_eq!(r.all_pass, r.criteria.iter().all(|c| c.pass));
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = quick(Scenario::Thm1OneD);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg, Some(a.path())).unwrap();
    run_scenario(&cfg, Some(b.path())).unwrap();
    for f in ["trajectory.csv", "summary.json", "report.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn default_one_dimensional_run_keeps_subcritical_regions_nested() {
    let cfg = ExperimentConfig::defaults(Scenario::Thm1OneD);
    let r = run_scenario(&cfg, None).unwrap();
    assert!(r.all_pass, "{:?}", r.criteria);
}

#[test]
fn reversed_seed_is_rejected_by_field() {
    let e = ExperimentConfig::from_value(&json!({"scenario": "thm2-radial", "geometry": {"seed": [1.1, 0.9]}})).unwrap_err();
    assert!(e.to_string().starts_with("geometry.seed"), "{e}");
}

#[test]
fn counterexample_sweep_flips_once_at_the_frozen_member() {
    let values: Vec<_> = (1..=20).map(|n| json!(n)).collect();
    let rows = run_sweep(&json!({"scenario": "counterexample"}), "/counterexample/n", &values, None).unwrap();
    let certified: Vec<bool> = rows.iter().map(|r| r.report.criteria[0].pass).collect();
    let first = certified.iter().position(|&c| c).unwrap();
    assert_eq!(first + 1, 4);
    assert!(certified[first..].iter().all(|&c| c));
    assert!(certified[..first].iter().all(|&c| !c));
    assert_eq!(sweep_csv(&rows).lines().count(), 21);
}

#[test]
fn outer_radius_sweep_scales_the_cone_speed() {
    let base = json!({"scenario": "thm2-radial", "n_cells": 80, "run": {"t_end": 0.02, "snapshot_dt": 0.01}});
    let rows = run_sweep(&base, "/geometry/domain/1", &[json!(1.25), json!(1.5), json!(2.0)], None).unwrap();
    let k: Vec<f64> = rows.iter().map(|r| r.report.margins["k0"]).collect();
    assert!((k[0] * 1.25 - k[2] * 2.0).abs() < 1e-12);
    assert!((k[1] - 0.471_404_520_791_031_7).abs() < 1e-12);
}

#[test]
fn plots_follow_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_scenario(&quick(Scenario::Thm2Radial), Some(dir.path())).unwrap();
    assert!(r.files.contains(&"fronts.csv".to_string()));
    let written = emit_plots(&dir.path().join("report.json")).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
    assert_eq!(names, ["profiles.svg", "fronts.svg"]);
    std::fs::remove_file(dir.path().join("fronts.csv")).unwrap();
    assert!(emit_plots(&dir.path().join("report.json")).is_err());
}

fn pmfront(out: &std::path::Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_pmfront"))
        .env("PMFRONT_OUT", out)
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pmfront(dir.path(), &["counterexample"]), 0);
    assert!(dir.path().join("counterexample/certificate.json").exists());
    assert_eq!(pmfront(dir.path(), &["counterexample", "--n-max", "1"]), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"scenario": "thm1-1d", "geometry": {"seed": [0.7, 0.3]}}"#).unwrap();
    assert_eq!(pmfront(dir.path(), &["simulate", bad.to_str().unwrap()]), 2);
    let not_barrier = dir.path().join("thm1.json");
    std::fs::write(&not_barrier, r#"{"scenario": "thm1-1d"}"#).unwrap();
    assert_eq!(pmfront(dir.path(), &["verify-barrier", not_barrier.to_str().unwrap()]), 2);
}
