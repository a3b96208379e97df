mod common;

use common::corpus::{all_fixtures, fixture, run_bin, run_fixture, schema_problems, EXPECTED, INVALID};
use opfactor::cli::{parse_problem, ProblemFile};

fn load(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn corpus_has_enough_files() {
    assert!(all_fixtures().len() >= 12);
}

#[test]
fn expected_exit_codes_and_verdicts() {
    for &(file, cmd, status, verdict) in EXPECTED {
        let text = run_fixture(file, cmd, &[]);
        assert_eq!(text.status, status, "{file} {cmd}: {}{}", text.stdout, text.stderr);
        let json = run_fixture(file, cmd, &["--json"]);
        assert_eq!(json.status, status, "{file} {cmd} --json");
        assert!(schema_problems(&json.stdout, cmd).is_empty(), "{file} {cmd}: {:?}", schema_problems(&json.stdout, cmd));
        let v: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
        match verdict {
            Some(want) => assert_eq!(v["verdict"], want, "{file} {cmd}"),
            None => assert!(v["verdict"].is_null(), "{file} {cmd}"),
        }
    }
}

#[test]
fn every_command_runs_on_every_file() {
    for path in all_fixtures() {
        for cmd in ["expand", "conditions", "check", "factor", "cascade"] {
            let out = run_bin(&[cmd, path.to_str().unwrap(), "--json"]);
            assert!((0..=3).contains(&out.status), "{} {cmd}", path.display());
            assert!(schema_problems(&out.stdout, cmd).is_empty(), "{} {cmd}", path.display());
        }
    }
}

#[test]
fn check_exit_code_matches_verdict() {
    for path in all_fixtures() {
        let out = run_bin(&["check", path.to_str().unwrap(), "--json"]);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(out.status == 0, v["verdict"] == "PASS", "{}", path.display());
    }
}

#[test]
fn reports_are_deterministic() {
    for path in all_fixtures() {
        for cmd in ["check", "factor", "cascade"] {
            let a = run_bin(&[cmd, path.to_str().unwrap(), "--json", "--seed", "11"]);
            let b = run_bin(&[cmd, path.to_str().unwrap(), "--json", "--seed", "11"]);
            assert_eq!(a.stdout, b.stdout, "{} {cmd}", path.display());
        }
    }
}

#[test]
fn fixtures_round_trip() {
    for path in all_fixtures() {
        let name = path.file_name().unwrap().to_str().unwrap();
        let parsed = parse_problem(&load(&path));
        if INVALID.contains(&name) {
            assert!(parsed.is_err(), "{name}");
            continue;
        }
        let p: ProblemFile = parsed.unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_problem(&p.to_string()).unwrap(), p, "{name}");
    }
}

#[test]
fn check_report_text() {
    let out = run_fixture("const_ode.ini", "check", &[]);
    assert_eq!(out.stdout.lines().next(), Some("PASS, 3/3 conditions residual 0"));
    let out = run_fixture("harmonic.ini", "factor", &[]);
    assert_eq!(out.status, 1);
    assert!(out.stderr.contains("NoRealFactorization"));
    let out = run_fixture("wave.ini", "expand", &[]);
    assert!(out.stdout.contains("u_{(2,1)} - u_{(2,4)}"));
}

#[test]
fn csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run_fixture("system_diag.ini", "cascade", &["--csv", d, "--steps", "256"]);
    assert_eq!(out.status, 0, "{}", out.stderr);
    let text = std::fs::read_to_string(dir.path().join("u0_1.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,u1,u2");
    assert_eq!(lines.len(), 258);
    let last: Vec<f64> = lines[257].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 2f64.exp()).abs() < 1e-8);
    let out = run_fixture("const_ode.ini", "cascade", &["--csv", d, "--interval", "0,1", "--steps", "8"]);
    assert_eq!(out.status, 0);
    let text = std::fs::read_to_string(dir.path().join("u1.csv")).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(fixture("const_ode.ini").exists());
}

#[test]
fn usage_errors() {
    assert_eq!(run_bin(&[]).status, 2);
    assert_eq!(run_bin(&["frobnicate", "x.ini"]).status, 2);
    assert_eq!(run_bin(&["check", "/no/such/file.ini"]).status, 2);
    assert_eq!(run_bin(&["--help"]).status, 0);
}
