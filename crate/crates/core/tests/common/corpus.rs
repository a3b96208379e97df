//! The problem-file corpus and the binary runner.

use std::path::PathBuf;
use std::process::Command;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/problems").join(name)
}

pub fn all_fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixture(""))
        .expect("fixture directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "ini"))
        .collect();
    v.sort();
    v
}

/// Files that fail to parse or validate on purpose.
pub const INVALID: [&str; 2] = ["bad_linear.ini", "bad_syntax.ini"];

/// `(file, command, exit status, JSON verdict)`.
pub const EXPECTED: &[(&str, &str, i32, Option<&str>)] = &[
    ("const_ode.ini", "expand", 0, None),
    ("const_ode.ini", "conditions", 0, None),
    ("const_ode.ini", "check", 0, Some("PASS")),
    ("const_ode.ini", "factor", 0, Some("FACTORED")),
    ("const_ode.ini", "cascade", 0, Some("SOLVED")),
    ("const_ode_wrong.ini", "check", 1, Some("FAIL")),
    ("harmonic.ini", "factor", 1, Some("NoRealFactorization")),
    ("double_root.ini", "cascade", 0, Some("SOLVED")),
    ("riccati.ini", "factor", 0, Some("FACTORED")),
    ("riccati.ini", "cascade", 0, Some("SOLVED")),
    ("airy.ini", "factor", 1, Some("NoSolutionInAnsatz")),
    ("wave.ini", "expand", 0, None),
    ("wave.ini", "check", 0, Some("PASS")),
    ("wave.ini", "factor", 0, Some("FACTORED")),
    ("laplace.ini", "factor", 1, Some("NoRealFactorization")),
    ("degenerate.ini", "factor", 1, Some("Obligation")),
    ("degenerate.ini", "check", 2, Some("ValidationError")),
    ("burgers_like.ini", "check", 0, Some("PASS")),
    ("burgers_like.ini", "cascade", 0, Some("SOLVED")),
    ("burgers_like.ini", "factor", 1, Some("UnsupportedTemplate")),
    ("nonlinear_pde.ini", "conditions", 0, None),
    ("nonlinear_pde.ini", "check", 0, Some("PASS")),
    ("nonlinear_pde.ini", "cascade", 1, Some("NotApplicable")),
    ("system_diag.ini", "check", 0, Some("PASS")),
    ("system_diag.ini", "cascade", 0, Some("SOLVED")),
    ("system_diag.ini", "factor", 1, Some("UnsupportedTemplate")),
    ("system_coupled.ini", "conditions", 0, None),
    ("system_coupled.ini", "check", 0, Some("PASS")),
    ("system_coupled.ini", "cascade", 0, Some("SOLVED")),
    ("bad_syntax.ini", "expand", 2, Some("ParseError")),
    ("bad_linear.ini", "check", 2, Some("ValidationError")),
];

pub struct Run {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_bin(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_opfactor")).args(args).output().expect("binary runs");
    Run {
        status: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8"),
        stderr: String::from_utf8(out.stderr).expect("utf-8"),
    }
}

pub fn run_fixture(name: &str, command: &str, extra: &[&str]) -> Run {
    let path = fixture(name);
    let mut args = vec![command, path.to_str().expect("utf-8 path")];
    args.extend_from_slice(extra);
    run_bin(&args)
}

pub const JSON_KEYS: [&str; 15] = [
    "schema", "command", "kind", "n", "m", "verdict", "error", "expansion", "conditions", "residuals", "candidates",
    "solutions", "delta", "obligation", "numeric",
];

/// Problems with the JSON report of one run; empty when it conforms.
pub fn schema_problems(text: &str, command: &str) -> Vec<String> {
    let v: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return vec![format!("not JSON: {e}")],
    };
    let mut bad = Vec::new();
    let Some(obj) = v.as_object() else {
        return vec!["not an object".into()];
    };
    for key in JSON_KEYS {
        if !obj.contains_key(key) {
            bad.push(format!("missing key {key}"));
        }
    }
    if obj.len() != 15 {
        bad.push(format!("{} keys, expected 15", obj.len()));
    }
    if v["schema"] != 1 {
        bad.push("schema is not 1".into());
    }
    if v["command"] != command {
        bad.push(format!("command is {}", v["command"]));
    }
    for list in ["expansion", "conditions", "residuals", "candidates", "solutions"] {
        if !v[list].is_array() {
            bad.push(format!("{list} is not a list"));
        }
    }
    for r in v["residuals"].as_array().into_iter().flatten() {
        if !(r["label"].is_string() && r["residual"].is_string() && r["zero"].is_boolean()) {
            bad.push(format!("malformed residual {r}"));
        }
    }
    for s in v["solutions"].as_array().into_iter().flatten() {
        if !(s["name"].is_string() && s["provenance"].is_string() && s["residual"]["max_relative"].is_number()) {
            bad.push(format!("malformed solution {s}"));
        }
    }
    bad
}
