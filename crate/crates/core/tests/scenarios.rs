use leafquant::scenario::{
    parse_scenario, preset, preset_names, preset_source, run, verify, ConfigError, OutputKind, RunOptions, RunReport,
    VerifyError,
};
use serde_json::{json, Value};

fn flat_loop() -> Value {
    serde_json::from_str(preset_source("flat_loop").unwrap()).unwrap()
}

fn cheap(mut v: Value) -> Value {
    v["grid"]["N"] = json!(32);
    v["integrator"]["steps"] = json!(64);
    v
}

#[test]
fn missing_grid_points_names_the_field() {
    let mut v = flat_loop();
    v["grid"].as_object_mut().unwrap().remove("N");
    let err = parse_scenario(&v.to_string()).unwrap_err();
    assert!(matches!(err, ConfigError::Schema { .. }), "{err}");
    assert_eq!(err.pointer(), Some("/grid/N"));
}

#[test]
fn unknown_key_is_rejected() {
    let mut v = flat_loop();
    v["grid"]["spacing"] = json!(0.1);
    let err = parse_scenario(&v.to_string()).unwrap_err();
    assert_eq!(err.pointer(), Some("/grid/spacing"));
}

#[test]
fn out_of_range_fiber_variable_is_an_expression_error() {
    let mut v = flat_loop();
    v["connection"]["lambda"] = json!([["1", "q3"]]);
    let cfg = parse_scenario(&v.to_string()).unwrap();
    let err = cfg.build().err().unwrap();
    match &err {
        ConfigError::Expression { pointer, .. } => assert_eq!(pointer, "/connection/lambda/0/1"),
        other => panic!("unexpected {other}"),
    }
    assert!(err.to_string().contains("q3"));
}

#[test]
fn constant_expressions_are_accepted_as_numbers() {
    let cfg = preset("flat_loop").unwrap();
    assert!((cfg.path.span[1] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn presets_round_trip_through_json() {
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        assert_eq!(parse_scenario(&cfg.to_json()).unwrap(), cfg, "{name}");
    }
}

#[test]
fn report_json_round_trips_exactly() {
    let cfg = parse_scenario(&cheap(flat_loop()).to_string()).unwrap();
    let report = run(&cfg, None, &RunOptions::default()).unwrap();
    assert!(!report.rows.is_empty());
    assert_eq!(RunReport::from_json(&report.to_json()).unwrap(), report);
}

#[test]
fn timeseries_is_deterministic() {
    let cfg = parse_scenario(&cheap(flat_loop()).to_string()).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&cfg, Some(a.path()), &RunOptions::default()).unwrap();
    run(&cfg, Some(b.path()), &RunOptions::default()).unwrap();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("timeseries.csv")).unwrap();
    let csv = read(&a);
    assert_eq!(csv, read(&b));
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,sigma_1,sigma_2,dsigma_dt_1,dsigma_dt_2,exp_q_1,exp_p_1,norm,"));
    assert_eq!(lines.count(), 65);
}

#[test]
fn step_override_and_dumps() {
    let cfg = parse_scenario(&cheap(flat_loop()).to_string()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(
        &cfg,
        Some(dir.path()),
        &RunOptions {
            steps: Some(16),
            dump_unitary: true,
        },
    )
    .unwrap();
    assert_eq!(report.steps, 16);
    for f in ["report.json", "timeseries.csv", "unitary.fqu", "geometric.fqu"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let bytes = std::fs::read(dir.path().join("unitary.fqu")).unwrap();
    assert_eq!(bytes.len(), 16 + 16 * 32 * 32);
}

#[test]
fn outputs_select_the_reports() {
    let mut v = cheap(flat_loop());
    v["outputs"] = json!(["timeseries"]);
    let cfg = parse_scenario(&v.to_string()).unwrap();
    assert!(!cfg.wants(OutputKind::Holonomy));
    let report = run(&cfg, None, &RunOptions::default()).unwrap();
    assert!(report.holonomy.is_none());
    assert!(report.check("flat_holonomy").is_none());
}

#[test]
fn unknown_suite_is_a_validation_error() {
    let err = verify("everything").unwrap_err();
    assert!(matches!(err, VerifyError::UnknownSuite(_)));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unknown_preset_lists_the_known_ones() {
    let err = preset("moebius").unwrap_err();
    let msg = err.to_string();
    assert!(preset_names().all(|n| msg.contains(n)), "{msg}");
}
