//! Command-line front end: problem files in, text or JSON reports out.
//!
//! Exit codes: 0 on success or PASS, 1 on FAIL or a named negative
//! outcome, 2 on parse and validation errors, 3 on capacity and internal
//! errors.

mod problem;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::cascade::{cascade_ode, cascade_system_numeric, CascadeError, CascadeOptions, SolutionForm};
use crate::conditions::{check_candidate, derive_conditions, CheckOptions, ConditionsError, Domain, FactorizationCandidate, Operator, Shape};
use crate::expr::{Bindings, VarId};
use crate::factor::{factor_ode, factor_pde_second_order, FactorError, PdeOutcome, SearchConfig};
use crate::jet::JetError;
use crate::operator::{Linearity, OperatorError};

pub use problem::{parse_interval, parse_problem, Coefficients, Key, ProblemError, ProblemFile, SolveSection};
pub use report::{CandidateJson, ObligationJson, Report, ResidualJson, SolutionJson, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Canonical jet polynomial of the operator, or of the candidate product.
    Expand,
    /// Factorization conditions of the file's template.
    Conditions,
    /// Compare the candidate with the operator.
    Check,
    /// Search for a factorization.
    Factor,
    /// Particular solutions from the candidate (or the first factorization).
    Cascade,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Expand => "expand",
            Command::Conditions => "conditions",
            Command::Check => "check",
            Command::Factor => "factor",
            Command::Cascade => "cascade",
        }
    }
}

fn interval_arg(s: &str) -> Result<(f64, f64), String> {
    parse_interval(s)
}

#[derive(Debug, Clone, PartialEq, clap::Args)]
pub struct Flags {
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points for the numeric probe of `check`.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    /// Relative tolerance of the numeric probe.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "ansatz-degree", default_value_t = 3)]
    pub ansatz_degree: usize,
    /// Cascade interval as `a,b`.
    #[arg(long, value_parser = interval_arg, allow_hyphen_values = true)]
    pub interval: Option<(f64, f64)>,
    /// Quadrature and RK4 steps for `cascade`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Directory for CSV trajectories written by `cascade`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl Default for Flags {
    fn default() -> Self {
        Flags { json: false, seed: 0, samples: 8, tol: 1e-9, ansatz_degree: 3, interval: None, steps: None, csv: None }
    }
}

#[derive(Debug, Parser)]
#[command(name = "opfactor", version, about = "Factor differential operators and build cascade solutions")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem file.
    file: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

/// Exit status and rendered report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    status: i32,
    name: String,
    message: String,
}

impl Failure {
    fn new(status: i32, name: &str, message: impl ToString) -> Self {
        Failure { status, name: name.to_string(), message: message.to_string() }
    }
}

fn operator_failure(e: &OperatorError) -> Failure {
    match e {
        OperatorError::OrderOverflow { .. } => Failure::new(EXIT_INTERNAL, "OrderOverflow", e),
        OperatorError::Jet(JetError::CapacityExceeded { .. }) => Failure::new(EXIT_INTERNAL, "CapacityExceeded", e),
        _ => Failure::new(EXIT_INTERNAL, "OperatorError", e),
    }
}

impl From<OperatorError> for Failure {
    fn from(e: OperatorError) -> Self {
        operator_failure(&e)
    }
}

impl From<ConditionsError> for Failure {
    fn from(e: ConditionsError) -> Self {
        match e {
            ConditionsError::Operator(o) => operator_failure(&o),
            ConditionsError::UnsupportedTemplate(_) => Failure::new(EXIT_FAIL, "UnsupportedTemplate", e),
            ConditionsError::ShapeMismatch(_) => Failure::new(EXIT_INTERNAL, "ShapeMismatch", e),
        }
    }
}

impl From<FactorError> for Failure {
    fn from(e: FactorError) -> Self {
        let name = match &e {
            FactorError::NoRealFactorization(_) => "NoRealFactorization",
            FactorError::NotConstant(_) => "NotConstant",
            FactorError::NonPolynomialCoefficients(_) => "NonPolynomialCoefficients",
            FactorError::NonPolynomialSqrtDelta(_) => "NonPolynomialSqrtDelta",
            FactorError::UnsupportedTemplate(_) => "UnsupportedTemplate",
            FactorError::Operator(o) => return operator_failure(o),
        };
        Failure::new(EXIT_FAIL, name, e)
    }
}

impl From<CascadeError> for Failure {
    fn from(e: CascadeError) -> Self {
        let (status, name) = match &e {
            CascadeError::SingularLeadingCoefficient(_) => (EXIT_FAIL, "SingularLeadingCoefficient"),
            CascadeError::QuadratureFailure(_) => (EXIT_FAIL, "QuadratureFailure"),
            CascadeError::StepCountTooSmall(_) => (EXIT_INPUT, "StepCountTooSmall"),
            CascadeError::NotApplicable(_) => (EXIT_FAIL, "NotApplicable"),
            CascadeError::Domain(_) => (EXIT_FAIL, "DomainError"),
            CascadeError::Operator(o) => return operator_failure(o),
            CascadeError::Conditions(c) => return c.clone().into(),
        };
        Failure::new(status, name, e)
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        let name = match e {
            ProblemError::Parse { .. } => "ParseError",
            ProblemError::Validation(_) => "ValidationError",
        };
        Failure::new(EXIT_INPUT, name, e)
    }
}

/// Report under construction plus its text rendering.
struct Out {
    report: Report,
    lines: Vec<String>,
}

impl Out {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

fn candidate_of(problem: &ProblemFile, command: Command) -> Result<FactorizationCandidate, Failure> {
    problem.candidate()?.ok_or_else(|| {
        let names = if problem.is_matrix() { "[N1] and [N2]" } else { "[Q1] and [Q2]" };
        Failure::new(EXIT_INPUT, "ValidationError", format!("{} needs a candidate in {names}", command.as_str()))
    })
}

fn candidate_json(c: &FactorizationCandidate) -> CandidateJson {
    let factors = match c {
        FactorizationCandidate::Scalar(fs) => fs.iter().map(|f| f.to_string()).collect(),
        FactorizationCandidate::Matrix(fs) => fs.iter().map(|f| f.to_string()).collect(),
    };
    CandidateJson { text: c.to_string(), factors, verdict: None, residual: None }
}

fn expand(problem: &ProblemFile, out: &mut Out) -> Result<i32, Failure> {
    let (grid, source) = match problem.candidate()? {
        Some(c) => (c.expand()?, "candidate product"),
        None => (problem.operator()?.jet_grid(), "operator"),
    };
    out.line(format!("{source}:"));
    for row in grid {
        let mut it = row.into_iter();
        let first = it.next().expect("square grid");
        let sum = it.fold(first, |acc, e| acc.add(&e));
        out.line(sum.to_string());
        out.report.expansion.push(sum.to_string());
    }
    Ok(EXIT_OK)
}

fn conditions(problem: &ProblemFile, out: &mut Out) -> Result<i32, Failure> {
    let system = derive_conditions(problem.kind, problem.n, problem.m)?;
    out.line(format!("{} conditions for {} (m = {}):", system.len(), problem.kind, problem.m));
    for c in system.equations() {
        let text = system.equation_text(c);
        out.line(format!("  {text}"));
        out.report.conditions.push(text);
    }
    if let Some(cand) = problem.candidate()? {
        let op = problem.operator()?;
        out.line("residuals for the candidate:");
        for (c, r) in system.equations().iter().zip(system.residuals(&op, &cand)) {
            let label = system.equation_text(c);
            out.line(format!("  {r}    from {label}"));
            out.report.residuals.push(ResidualJson::new("condition", label, &r));
        }
    }
    Ok(EXIT_OK)
}

fn check(problem: &ProblemFile, flags: &Flags, out: &mut Out) -> Result<i32, Failure> {
    let cand = candidate_of(problem, Command::Check)?;
    let op = problem.operator()?;
    let opts = CheckOptions { samples: flags.samples, tol: flags.tol, seed: flags.seed, test_degree: 4 };
    let rep = check_candidate(&op, &cand, &opts)?;
    let verdict = rep.verdict.as_str();
    out.report.verdict = Some(verdict.into());
    out.report.candidates.push(CandidateJson { verdict: Some(verdict.into()), ..candidate_json(&cand) });
    match rep.condition_tally() {
        Some((zero, total)) => out.line(format!("{verdict}, {zero}/{total} conditions residual 0")),
        None => out.line(format!("{verdict}, {} non-zero terms in P - Q1 Q2", rep.terms.len())),
    }
    for t in &rep.terms {
        let label = format!("[{},{}] {}", t.entry.0, t.entry.1, t.monomial);
        out.line(format!("  term {label}: {}", t.residual));
        out.report.residuals.push(ResidualJson::new("term", label, &t.residual));
    }
    for c in rep.conditions.iter().flatten() {
        if !c.is_zero() {
            out.line(format!("  condition {}: residual {}", c.equation, c.residual));
        }
        out.report.residuals.push(ResidualJson::new("condition", c.equation.clone(), &c.residual));
    }
    if let Some(n) = rep.numeric {
        let within = if n.within_tol { "within" } else { "above" };
        out.line(format!("numeric: max relative residual {:.3e} at {} points, {within} tol {:e}", n.max_relative, n.points, flags.tol));
        out.report.numeric = Some(report::NumericJson { max_relative: n.max_relative, points: n.points, within_tol: n.within_tol });
    }
    Ok(if rep.passed() { EXIT_OK } else { EXIT_FAIL })
}

fn search_config(flags: &Flags) -> SearchConfig {
    SearchConfig { ansatz_degree: flags.ansatz_degree, allow_swap: true, seed: flags.seed }
}

fn verified(op: &Operator, c: &FactorizationCandidate) -> Result<CandidateJson, Failure> {
    let symbolic = CheckOptions { samples: 0, ..CheckOptions::default() };
    let verdict = check_candidate(op, c, &symbolic)?.verdict.as_str();
    Ok(CandidateJson { verdict: Some(verdict.into()), ..candidate_json(c) })
}

/// Candidates found by `factor`; empty when the search comes back empty.
fn search(problem: &ProblemFile, flags: &Flags, out: &mut Out) -> Result<Vec<FactorizationCandidate>, Failure> {
    let op = problem.operator()?;
    let scalar = match (&op, problem.kind.linearity) {
        (Operator::Scalar(s), Linearity::Linear) => s,
        _ => {
            return Err(Failure::new(
                EXIT_FAIL,
                "UnsupportedTemplate",
                format!("UnsupportedTemplate: no factorization search for kind {}", problem.kind),
            ))
        }
    };
    let cfg = search_config(flags);
    match problem.kind.domain {
        Domain::Ode => {
            let found = factor_ode(scalar, &cfg)?;
            for c in &found {
                let j = verified(&op, c)?;
                out.line(format!("candidate: {}    [{}]", j.text, j.verdict.as_deref().unwrap_or("")));
                out.report.candidates.push(j);
            }
            Ok(found)
        }
        Domain::Pde2 => {
            let res = factor_pde_second_order(scalar, &cfg)?;
            out.line(format!("delta = {}", res.delta));
            out.report.delta = Some(res.delta.to_string());
            match &res.outcome {
                PdeOutcome::Split(branches) => {
                    for b in branches {
                        let mut j = verified(&op, &b.candidate)?;
                        j.residual = Some(b.residual.to_string());
                        out.line(format!("candidate: {}    [{}], residual {}", j.text, j.verdict.as_deref().unwrap_or(""), b.residual));
                        out.report.residuals.push(ResidualJson::new("branch", j.text.clone(), &b.residual));
                        out.report.candidates.push(j);
                    }
                    Ok(res.successes().into_iter().map(|b| b.candidate.clone()).collect())
                }
                PdeOutcome::Degenerate(ob) => {
                    out.line("remaining equation for Z = b[2,0,1](x1,x2):");
                    for l in ob.to_string().lines() {
                        out.line(format!("  {l}"));
                    }
                    out.report.obligation = Some(ObligationJson {
                        l: ob.l.iter().map(|e| e.to_string()).collect(),
                        equation: ob.equation.to_string(),
                        compatibility: ob.compatibility.to_string(),
                    });
                    Err(Failure::new(EXIT_FAIL, "Obligation", "no candidate until Z is supplied"))
                }
            }
        }
    }
}

fn factor(problem: &ProblemFile, flags: &Flags, out: &mut Out) -> Result<i32, Failure> {
    let found = search(problem, flags, out)?;
    if found.is_empty() {
        let why = match problem.kind.domain {
            Domain::Ode => format!("no polynomial Y of degree <= {} solves the Riccati equation", flags.ansatz_degree),
            Domain::Pde2 => "no branch has zero compatibility residual".to_string(),
        };
        let name = if problem.kind.domain == Domain::Ode { "NoSolutionInAnsatz" } else { "ResidualNonZero" };
        return Err(Failure::new(EXIT_FAIL, name, format!("{name}: {why}")));
    }
    out.report.verdict = Some("FACTORED".into());
    Ok(EXIT_OK)
}

fn csv_name(name: &str) -> String {
    name.replace('[', "_").replace(']', "")
}

fn write_csv(dir: &Path, sol: &crate::cascade::Solution, opts: &CascadeOptions) -> Result<PathBuf, Failure> {
    let traj = match &sol.form {
        SolutionForm::Sampled(t) => t.clone(),
        SolutionForm::Closed(e) => {
            let grid = crate::cascade::linspace(opts.interval.0, opts.interval.1, opts.steps);
            let values = grid
                .iter()
                .map(|&x| vec![e.eval(&Bindings::new().with(VarId::x(1), x)).unwrap_or(f64::NAN)])
                .collect();
            crate::Trajectory64 { grid, values }
        }
    };
    let path = dir.join(format!("{}.csv", csv_name(&sol.name)));
    std::fs::write(&path, traj.to_csv()).map_err(|e| Failure::new(EXIT_INTERNAL, "IoError", format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn cascade(problem: &ProblemFile, flags: &Flags, out: &mut Out) -> Result<i32, Failure> {
    let cand = match problem.candidate()? {
        Some(c) => c,
        None => {
            out.line("no candidate in the file; running factor first");
            let found = search(problem, flags, out)?;
            found.into_iter().next().ok_or_else(|| Failure::new(EXIT_FAIL, "NoSolutionInAnsatz", "factor found no candidate"))?
        }
    };
    if problem.candidate()?.is_some() {
        out.report.candidates.push(candidate_json(&cand));
    }
    let defaults = CascadeOptions::default();
    let opts = CascadeOptions {
        interval: flags.interval.or(problem.solve.interval).unwrap_or(defaults.interval),
        steps: flags.steps.or(problem.solve.steps).unwrap_or(defaults.steps),
        constant: problem.solve.constant.clone().unwrap_or(defaults.constant),
        ..defaults
    };
    let sols = match (problem.kind.domain, problem.kind.shape) {
        (Domain::Ode, Shape::Scalar) => cascade_ode(&cand, &opts)?,
        (Domain::Ode, Shape::Matrix) => cascade_system_numeric(&cand, opts.interval, &opts)?,
        (Domain::Pde2, _) => {
            return Err(CascadeError::NotApplicable(format!("no cascade for kind {}", problem.kind)).into());
        }
    };
    out.line(format!("interval [{}, {}], {} steps", opts.interval.0, opts.interval.1, opts.steps));
    if let Some(dir) = &flags.csv {
        std::fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_INTERNAL, "IoError", format!("{}: {e}", dir.display())))?;
    }
    for sol in &sols.solutions {
        let j = SolutionJson::new(sol);
        let r = &sol.residual;
        let shown = match &sol.form {
            SolutionForm::Closed(e) => e.to_string(),
            SolutionForm::Sampled(t) => format!("{} samples", t.grid.len()),
        };
        let residual = match &r.symbolic {
            Some(s) if s.is_zero() => "residual 0".to_string(),
            Some(s) => format!("residual {s}"),
            None => format!("max relative residual {:.3e}", r.max_relative),
        };
        out.line(format!("{} = {shown}    [{}, {residual}]", sol.name, sol.provenance.as_str()));
        out.report.solutions.push(j);
        if let Some(dir) = &flags.csv {
            let path = write_csv(dir, sol, &opts)?;
            out.line(format!("  wrote {}", path.display()));
        }
    }
    out.report.verdict = Some("SOLVED".into());
    Ok(EXIT_OK)
}

/// Run one command on a parsed problem.
pub fn run(command: Command, flags: &Flags, problem: &ProblemFile) -> Outcome {
    let mut out = Out { report: Report::new(command.as_str(), Some(problem)), lines: Vec::new() };
    let result = match command {
        Command::Expand => expand(problem, &mut out),
        Command::Conditions => conditions(problem, &mut out),
        Command::Check => check(problem, flags, &mut out),
        Command::Factor => factor(problem, flags, &mut out),
        Command::Cascade => cascade(problem, flags, &mut out),
    };
    finish(out, result, flags.json)
}

fn finish(mut out: Out, result: Result<i32, Failure>, json: bool) -> Outcome {
    let (status, err) = match result {
        Ok(s) => (s, None),
        Err(f) => {
            out.report.verdict.get_or_insert(f.name.clone());
            out.report.error = Some(f.message.clone());
            (f.status, Some(f.message))
        }
    };
    if json {
        return Outcome { status, stdout: out.report.to_json(), stderr: String::new() };
    }
    let mut stdout = out.lines.join("\n");
    if !stdout.is_empty() {
        stdout.push('\n');
    }
    let stderr = err.map(|m| format!("{m}\n")).unwrap_or_default();
    Outcome { status, stdout, stderr }
}

/// Parse `text` and run `command` on it.
pub fn run_text(command: Command, flags: &Flags, text: &str) -> Outcome {
    match parse_problem(text) {
        Ok(p) => run(command, flags, &p),
        Err(e) => {
            let out = Out { report: Report::new(command.as_str(), None), lines: Vec::new() };
            finish(out, Err(e.into()), flags.json)
        }
    }
}

/// Entry point of the binary: parse arguments, read the file, run.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { status, stdout: String::new(), stderr: text }
            } else {
                Outcome { status, stdout: text, stderr: String::new() }
            };
        }
    };
    match std::fs::read_to_string(&cli.file) {
        Ok(text) => run_text(cli.command, &cli.flags, &text),
        Err(e) => {
            let out = Out { report: Report::new(cli.command.as_str(), None), lines: Vec::new() };
            let f = Failure::new(EXIT_INPUT, "IoError", format!("{}: {e}", cli.file.display()));
            finish(out, Err(f), cli.flags.json)
        }
    }
}

#[cfg(test)]
mod tests;
