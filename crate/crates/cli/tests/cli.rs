use std::process::Command as Process;

use uc_cli::config::RunConfig;
use uc_cli::report::{format_number, Cell, Check, SuiteOutput, Table, CSV_SCHEMA};
use uc_cli::suites::{carleman, demo, geometry, pipeline};
use uc_cli::{run, Command};

#[test]
fn defaults_validate_for_every_command() {
    let cfg = RunConfig::default();
    for c in [
        Command::CurvatureCheck,
        Command::FrameOde,
        Command::SystemResiduals,
        Command::CarlemanVerify,
        Command::UcDemo,
        Command::DiffPipeline,
    ] {
        assert!(cfg.validate(c).is_ok(), "{}", c.name());
    }
}

#[test]
fn parse_errors_point_at_the_line() {
    let err = RunConfig::from_toml("[carleman]\ndelta = 0.05\nradius = \"big\"\n", "x.toml").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("x.toml") && msg.contains("line 3"), "{msg}");
    let err = RunConfig::from_toml("[carleman]\ndelt = 0.05\n", "y.toml").unwrap_err();
    assert!(err.to_string().contains("delt"), "{err}");
}

#[test]
fn validation_names_each_bad_field() {
    let cfg = RunConfig::from_toml("[carleman]\ndelta = 0.9\nradius = 0.6\n\n[sweep]\nlambdas = [2.0, 8.0]\n", "z").unwrap();
    let err = cfg.validate(Command::CarlemanVerify).unwrap_err();
    let d = err.diagnostics.join("\n");
    for field in ["carleman.delta", "carleman.radius", "sweep.lambdas"] {
        assert!(d.contains(field), "{d}");
    }
    let mut cfg = RunConfig::default();
    cfg.geometry.preset = "sphere".into();
    cfg.geometry.curvature = -1.0;
    let d = cfg.validate(Command::CurvatureCheck).unwrap_err().diagnostics;
    assert_eq!(d.len(), 1);
    assert!(d[0].starts_with("geometry.curvature"));
}

#[test]
fn numbers_use_twelve_significant_digits() {
    assert_eq!(format_number(1.0), "1.00000000000e0");
    assert_eq!(format_number(-0.000123456789012345), "-1.23456789012e-4");
    assert_eq!(format_number(f64::INFINITY), "inf");
    let mut t = Table::new("demo", &["name", "x", "k"]);
    t.push(vec!["a,b".into(), 2.5.into(), 3usize.into()]);
    let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("{CSV_SCHEMA} table=demo"));
    assert_eq!(lines[1], "name,x,k");
    assert_eq!(lines[2], "\"a,b\",2.50000000000e0,3");
}

#[test]
fn summary_lists_every_check() {
    let out = SuiteOutput {
        checks: vec![Check::at_most("small", 1e-9, 1e-6), Check::at_least("big", 5.0, 10.0), Check::failed("broken", "test")],
        tables: vec![],
    };
    let v: serde_json::Value = serde_json::from_str(&out.summary_json()).unwrap();
    assert_eq!(v["small"]["pass"], true);
    assert_eq!(v["big"]["pass"], false);
    assert_eq!(v["big"]["tolerance"], 10.0);
    assert_eq!(v["broken"]["value"], "nan");
    assert_eq!(out.failures(), 2);
}

#[test]
fn euclidean_curvature_is_exactly_zero() {
    let mut cfg = RunConfig::default();
    cfg.geometry.preset = "euclidean".into();
    cfg.geometry.curvature = 0.0;
    cfg.geometry.points = 10;
    let out = run(Command::CurvatureCheck, &cfg);
    assert!(out.passed());
    assert!(out.checks.iter().all(|c| c.value == 0.0), "{:?}", out.checks);
}

#[test]
fn inadmissible_lambda_is_skipped() {
    let mut cfg = RunConfig::default();
    cfg.sweep.lambdas = vec![4.0, 4.5, 8.0];
    cfg.sweep.probe_min = 5.0;
    cfg.sweep.probe_max = 7.0;
    cfg.sweep.probe_step = 0.5;
    let out = carleman::carleman_verify(&cfg);
    let skipped = out.table("skipped_lambdas").unwrap();
    let lambdas: Vec<&Cell> = skipped.rows.iter().map(|r| &r[1]).collect();
    assert_eq!(lambdas, [&Cell::Num(4.5), &Cell::Num(5.5), &Cell::Num(6.5)]);
    let rows = &out.table("lemma2").unwrap().rows;
    assert!(rows.iter().all(|r| r[1] != Cell::Num(4.5)));
    assert_eq!(rows.len(), 12);
    assert!(out.check("lemma2_constant_finite").unwrap().pass);
}

#[test]
fn quartile_growth_matches_hand_values() {
    assert_eq!(carleman::quartile_growth(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]), 7.5 / 1.5);
    assert_eq!(carleman::quartile_growth(&[2.0; 5]), 1.0);
}

#[test]
fn demo_helpers() {
    use uc_experiments::chain::Bounded;
    let b = |lambda: f64, value: f64| Bounded { lambda, value, divergent: !value.is_finite() };
    assert_eq!(demo::flatness(&[b(10.0, 2.0), b(20.0, 3.0), b(30.0, 1.5)]), 2.0);
    assert_eq!(demo::growth(&[b(10.0, 2.0), b(20.0, 3.0), b(30.0, 2e4)]), 1e4);
    assert!(demo::growth(&[b(10.0, f64::INFINITY), b(20.0, f64::INFINITY)]).is_nan());
    assert_eq!(demo::worst_step(&[8.0, 4.0, 4.0, 0.0, 0.0]), 1.0);
    assert_eq!(demo::worst_step(&[1.0, 3.0, 0.5]), 3.0);
}

#[test]
fn bridging_potential_puts_both_spheres_on_shell() {
    for (n, ka, kb) in [(3, 1.0, 1.1), (4, 0.5, 0.8)] {
        let v = pipeline::bridging_potential(n, ka, kb);
        let m = (n - 1) as f64;
        let (at1, at0) = (v.derivatives(1.0), v.derivatives(0.0));
        assert!((at1[0] - m * ka).abs() < 1e-14 && at1[1].abs() < 1e-14);
        assert!((at0[0] - m * kb).abs() < 1e-14 && at0[1] == 0.0);
    }
}

#[test]
fn plane_rotation_is_orthogonal() {
    let q = pipeline::plane_rotation(4, 0.7);
    for i in 0..4 {
        for j in 0..4 {
            let dot: f64 = (0..4).map(|k| q[i * 4 + k] * q[j * 4 + k]).sum();
            assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
    }
}

#[test]
fn uc_demo_table_has_contrast_columns() {
    let mut cfg = RunConfig::default();
    cfg.demo.lambdas = vec![10.0, 20.0];
    cfg.demo.ok_k_max = 4;
    let out = demo::uc_demo(&cfg);
    let t = out.table("contrast").unwrap();
    assert_eq!(t.columns, ["function", "vanishing", "lambda", "bounded", "divergent"]);
    let power = t.rows.iter().filter(|r| r[0] == Cell::Text("power5".into())).count();
    assert_eq!(power, 2);
    assert!(t.rows.iter().any(|r| r[4] == Cell::Text("true".into())));
    assert!(t.rows.iter().any(|r| r[4] == Cell::Text("false".into())));
    assert!(out.table("sweep").is_some_and(|s| !s.rows.is_empty()));
}

#[test]
fn frame_suite_tables_are_seed_deterministic() {
    let mut cfg = RunConfig::default();
    cfg.geometry.preset = "hyperbolic".into();
    cfg.geometry.curvature = -1.0;
    cfg.frame.rays = 4;
    let a = geometry::frame_ode(&cfg);
    let b = geometry::frame_ode(&cfg);
    assert_eq!(a, b);
    cfg.run.seed += 1;
    assert_ne!(a.tables, geometry::frame_ode(&cfg).tables);
}

#[test]
fn binary_rejects_invalid_config_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[geometry]\npreset = \"torus\"\n").unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_uccheck"))
        .args(["curvature-check", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("geometry.preset") && err.contains("torus"), "{err}");
}

#[test]
fn binary_writes_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_uccheck"))
        .args(["curvature-check", "--seed", "3", "--jobs", "1", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "error")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("curvature_points.csv")).unwrap();
    assert!(csv.starts_with(CSV_SCHEMA));
    assert_eq!(csv.lines().count(), 102);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sphere_n3_ricci_analytic"]["pass"], true);
}
