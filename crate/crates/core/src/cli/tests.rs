use super::*;

const CONST_ODE: &str = "[problem]\nkind = linear-ode\n[operator]\ng[2,1] = \"1\"\ng[1,1] = \"-3\"\ng[0,1] = \"2\"\n";
const FACTORS: &str = "[Q1]\nb[1,1] = \"1\"\nb[0,1] = \"-1\"\n[Q2]\nb[1,1] = \"1\"\nb[0,1] = \"-2\"\n";

fn json(flags: &Flags) -> Flags {
    Flags { json: true, ..flags.clone() }
}

#[test]
fn check_passes_with_three_conditions() {
    let text = format!("{CONST_ODE}{FACTORS}");
    let out = run_text(Command::Check, &Flags::default(), &text);
    assert_eq!(out.status, EXIT_OK);
    assert!(out.stdout.starts_with("PASS, 3/3 conditions residual 0\n"), "{}", out.stdout);
}

#[test]
fn check_fails_on_wrong_candidate() {
    let text = format!("{CONST_ODE}{}", FACTORS.replace("\"-2\"", "\"-3\""));
    let out = run_text(Command::Check, &Flags::default(), &text);
    assert_eq!(out.status, EXIT_FAIL);
    assert!(out.stdout.starts_with("FAIL, 1/3 conditions residual 0"), "{}", out.stdout);
}

#[test]
fn factor_harmonic_oscillator() {
    let text = CONST_ODE.replace("g[1,1] = \"-3\"\n", "").replace("\"2\"", "\"1\"");
    let out = run_text(Command::Factor, &Flags::default(), &text);
    assert_eq!(out.status, EXIT_FAIL);
    assert!(out.stderr.contains("NoRealFactorization"), "{}", out.stderr);
    let out = run_text(Command::Factor, &json(&Flags::default()), &text);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "NoRealFactorization");
}

#[test]
fn expand_wave_candidate() {
    let text = "[problem]\nkind = linear-pde2\n[operator]\ng[2,1] = \"1\"\ng[2,4] = \"-1\"\n\
                [Q1]\nb[1,1] = \"1\"\nb[1,2] = \"1\"\n[Q2]\nb[1,1] = \"1\"\nb[1,2] = \"-1\"\n";
    let out = run_text(Command::Expand, &Flags::default(), text);
    assert_eq!(out.status, EXIT_OK);
    assert_eq!(out.stdout, "candidate product:\nu_{(2,1)} - u_{(2,4)}\n");
}

#[test]
fn input_errors_exit_two() {
    let out = run_text(Command::Expand, &Flags::default(), &CONST_ODE.replace("\"-3\"", "\"u\""));
    assert_eq!(out.status, EXIT_INPUT);
    assert!(out.stderr.starts_with("ValidationError"));
    let out = run_text(Command::Expand, &Flags::default(), &CONST_ODE.replace("\"-3\"", "\"(-3\""));
    assert_eq!(out.status, EXIT_INPUT);
    assert!(out.stderr.starts_with("ParseError: line 5"), "{}", out.stderr);
    let out = run_text(Command::Check, &Flags::default(), CONST_ODE);
    assert_eq!(out.status, EXIT_INPUT);
}

#[test]
fn factor_on_systems_is_unsupported() {
    let text = "[problem]\nkind = linear-ode-system\nm = 2\n[operator]\nf[1,1,2,1] = \"1\"\nf[2,2,2,1] = \"1\"\n";
    let out = run_text(Command::Factor, &Flags::default(), text);
    assert_eq!(out.status, EXIT_FAIL);
    assert!(out.stderr.starts_with("UnsupportedTemplate"), "{}", out.stderr);
}

#[test]
fn capacity_errors_exit_three() {
    let f: Failure = OperatorError::OrderOverflow { order: 9, cap: 8 }.into();
    assert_eq!(f.status, EXIT_INTERNAL);
    let f: Failure = CascadeError::StepCountTooSmall(2).into();
    assert_eq!(f.status, EXIT_INPUT);
}

#[test]
fn json_keys_are_stable() {
    let text = format!("{CONST_ODE}{FACTORS}");
    for cmd in [Command::Expand, Command::Conditions, Command::Check, Command::Factor, Command::Cascade] {
        let out = run_text(cmd, &json(&Flags::default()), &text);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["command"], cmd.as_str());
        for key in ["verdict", "residuals", "candidates", "solutions", "delta", "error"] {
            assert!(v.get(key).is_some(), "{key} missing for {}", cmd.as_str());
        }
    }
}

#[test]
fn steps_flag_overrides_file() {
    let text = format!("{CONST_ODE}{FACTORS}[solve]\nsteps = 64\n");
    let flags = Flags { steps: Some(2), ..Flags::default() };
    // closed forms do not need the step count
    assert_eq!(run_text(Command::Cascade, &flags, &text).status, EXIT_OK);
    let sys = "[problem]\nkind = linear-ode-system\nm = 1\n[operator]\nf[1,1,2,1] = \"1\"\n\
               [N1]\na[1,1,1,1] = \"1\"\n[N2]\na[1,1,1,1] = \"1\"\n";
    let out = run_text(Command::Cascade, &flags, sys);
    assert_eq!(out.status, EXIT_INPUT);
    assert!(out.stderr.starts_with("StepCountTooSmall"), "{}", out.stderr);
}

#[test]
fn argument_parsing() {
    let out = main_with_args(["opfactor", "check", "/nonexistent/file.ini", "--samples", "3"]);
    assert_eq!(out.status, EXIT_INPUT);
    let out = main_with_args(["opfactor", "bogus", "x.ini"]);
    assert_eq!(out.status, EXIT_INPUT);
    let cli = Cli::try_parse_from(["opfactor", "cascade", "f.ini", "--interval", "-2,0.5", "--json", "--seed", "7"]).unwrap();
    assert_eq!(cli.flags.interval, Some((-2.0, 0.5)));
    assert!(cli.flags.json);
    assert_eq!(cli.flags.seed, 7);
    assert_eq!(Cli::try_parse_from(["opfactor", "expand", "f.ini"]).unwrap().flags, Flags::default());
}
