use std::path::PathBuf;
use std::process::{Command, Output};

use proptest::prelude::*;

use progmeter::multimeter::BUILTINS;
use progmeter::{Verdict, VerificationReport};
use progmeter_cli::{emit_report, parse_structured, run_scenario, Format, LoadOptions};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn progmeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progmeter")).args(args).output().expect("binary runs")
}

fn run_text(text: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, text).unwrap();
    let mut all = vec![path.to_str().unwrap()];
    all.extend_from_slice(args);
    progmeter(&all)
}

#[test]
fn pauli_scenario_recovers_spins() {
    let out = progmeter(&[fixture("pauli.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for s in ["pauli_S1", "pauli_S2", "pauli_S3"] {
        assert!(text.lines().any(|l| l.starts_with("pass") && l.contains(s)), "{text}");
    }
    assert!(text.lines().any(|l| l.starts_with("not_applicable") && l.contains("pauli_without_kernels")));
}

#[test]
fn bounds_scenario_passes() {
    let out = progmeter(&[fixture("bounds.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("upper_bound=2.400e1"));
}

#[test]
fn undefined_reference_exits_3() {
    let out = progmeter(&[fixture("undefined_reference.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("S4"));
}

#[test]
fn constructions_scenario_passes() {
    let out = progmeter(&[fixture("constructions.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn failed_check_exits_1() {
    let out = run_text(r#"{"runs": [{"command": "bounds", "outcome_counts": [2, 2], "expect": [2, 5]}]}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("progmeter report: 1 checks, 0 pass, 1 fail"));
}

#[test]
fn parse_error_exits_2_with_position() {
    let out = run_text("{\n  \"objects\": {\n    \"a\": {\"type\": \"spin\", \"direction\": [0, 0,]}\n  }\n}", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));
}

#[test]
fn dimension_error_exits_4() {
    let out = run_text(
        r#"{"objects": {
            "a": {"type": "spin", "direction": [0, 0, 1]},
            "u": {"type": "unitary", "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]},
            "m": {"type": "multimeter", "dim_h": 2, "pointer": "a", "coupling": "u"}
        }}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_seed_exits_2_and_flag_supplies_it() {
    let text = r#"{"runs": [{"command": "verify", "check": "counterexample_search", "dim_h": 2, "dim_k": 2, "trials": 20}]}"#;
    assert_eq!(run_text(text, &[]).status.code(), Some(2));
    assert_eq!(run_text(text, &["--seed", "5"]).status.code(), Some(0));
}

#[test]
fn structured_report_is_deterministic_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("constructions.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("report{i}.json"));
        let out = progmeter(&[
            scenario.to_str().unwrap(),
            "--format",
            "structured",
            "--report",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let reports = parse_structured(&outputs[0]).unwrap();
    assert_eq!(reports.len(), 19);
    assert_eq!(emit_report(&reports, Format::Structured), outputs[0]);
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let text = std::fs::read_to_string(fixture("constructions.json")).unwrap();
    let a = run_scenario(&text, LoadOptions { seed: Some(1), tol: None }).unwrap();
    let b = run_scenario(&text, LoadOptions { seed: Some(2), tol: None }).unwrap();
    let c = run_scenario(&text, LoadOptions::default()).unwrap();
    assert_ne!(a, b);
    assert_ne!(a, c);
}

#[test]
fn tol_flag_overrides_run_tolerances() {
    let text = std::fs::read_to_string(fixture("pauli.json")).unwrap();
    let strict = run_scenario(&text, LoadOptions { seed: None, tol: Some(0.0) }).unwrap();
    assert!(strict[..3].iter().all(|r| r.verdict == Verdict::Fail || r.residuals["distance"] == 0.0));
    let loose = run_scenario(&text, LoadOptions { seed: None, tol: Some(1e-3) }).unwrap();
    assert!(loose[..3].iter().all(VerificationReport::passed));
}

#[test]
fn list_builtins_names_every_construction() {
    let out = progmeter(&["--list-builtins"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in BUILTINS {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn every_builtin_is_reachable_from_a_scenario() {
    for (name, _) in BUILTINS {
        let params = match *name {
            "spin_pair" => r#", "observables": ["a", "b"]"#,
            "swap" => r#", "dim": 3"#,
            _ => "",
        };
        let text = format!(
            r#"{{"objects": {{
                "a": {{"type": "spin", "direction": [1, 0, 0]}},
                "b": {{"type": "spin", "direction": [0, 0, 1]}},
                "m": {{"type": "builtin", "name": "{name}"{params}}}
            }},
            "runs": [{{"command": "program", "multimeter": "m", "probe": 1}}]}}"#
        );
        let reports = run_scenario(&text, LoadOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(reports[0].verdict, Verdict::Pass, "{name}");
    }
}

#[test]
fn report_order_follows_scenario_order() {
    let runs: Vec<String> = (0..12)
        .map(|i| format!(r#"{{"command": "bounds", "name": "b{i}", "outcome_counts": [{}]}}"#, i + 1))
        .collect();
    let text = format!(r#"{{"runs": [{}]}}"#, runs.join(","));
    let reports = run_scenario(&text, LoadOptions::default()).unwrap();
    let names: Vec<_> = reports.iter().map(|r| r.check_name.clone()).collect();
    assert_eq!(names, (0..12).map(|i| format!("b{i}")).collect::<Vec<_>>());
}

fn residual_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => 0.0f64..1e6,
        1 => Just(0.0),
        1 => Just(f64::INFINITY),
        2 => (0.0f64..1.0).prop_map(|x| x * 1e-300),
    ]
}

fn report() -> impl Strategy<Value = VerificationReport> {
    (
        "[a-z_]{1,20}",
        prop_oneof![Just(Verdict::Pass), Just(Verdict::Fail), Just(Verdict::NotApplicable)],
        prop::collection::btree_map("[a-z_]{1,12}", residual_value(), 0..5),
        ".{0,40}",
    )
        .prop_map(|(check_name, verdict, residuals, details)| VerificationReport {
            check_name,
            verdict,
            residuals,
            details,
        })
}

proptest! {
    #[test]
    fn structured_reports_round_trip(reports in prop::collection::vec(report(), 0..6)) {
        let bytes = emit_report(&reports, Format::Structured);
        prop_assert_eq!(parse_structured(&bytes).unwrap(), reports);
    }
}
