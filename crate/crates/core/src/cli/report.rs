//! JSON report, schema version 1. Every key is always present; absent
//! values are `null` or empty lists.

use serde::Serialize;

use super::ProblemFile;
use crate::cascade::{Solution, SolutionForm};
use crate::expr::Expr;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// `PASS`, `FAIL`, `FACTORED`, `SOLVED`, or the name of the error.
    pub verdict: Option<String>,
    pub error: Option<String>,
    /// One jet polynomial per row.
    pub expansion: Vec<String>,
    pub conditions: Vec<String>,
    pub residuals: Vec<ResidualJson>,
    pub candidates: Vec<CandidateJson>,
    pub solutions: Vec<SolutionJson>,
    pub delta: Option<String>,
    pub obligation: Option<ObligationJson>,
    pub numeric: Option<NumericJson>,
}

impl Report {
    pub fn new(command: &str, problem: Option<&ProblemFile>) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            kind: problem.map(|p| p.kind.name()),
            n: problem.map(|p| p.n),
            m: problem.map(|p| p.m),
            verdict: None,
            error: None,
            expansion: Vec::new(),
            conditions: Vec::new(),
            residuals: Vec::new(),
            candidates: Vec::new(),
            solutions: Vec::new(),
            delta: None,
            obligation: None,
            numeric: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualJson {
    /// `condition`, `term` or `branch`.
    pub source: String,
    pub label: String,
    pub residual: String,
    pub zero: bool,
}

impl ResidualJson {
    pub fn new(source: &str, label: String, residual: &Expr) -> Self {
        ResidualJson { source: source.into(), label, residual: residual.to_string(), zero: residual.is_zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateJson {
    pub text: String,
    /// Factors, leftmost first.
    pub factors: Vec<String>,
    /// Symbolic check of the candidate against the operator.
    pub verdict: Option<String>,
    /// Compatibility residual of a two-variable split.
    pub residual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObligationJson {
    pub l: Vec<String>,
    pub equation: String,
    pub compatibility: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericJson {
    pub max_relative: f64,
    pub points: usize,
    pub within_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionResidualJson {
    pub symbolic: Option<String>,
    pub exact: bool,
    pub max_abs: f64,
    pub max_relative: f64,
    pub points: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionJson {
    pub name: String,
    pub provenance: String,
    /// Closed form, or `null` for sampled solutions.
    pub expr: Option<String>,
    pub samples: usize,
    pub residual: SolutionResidualJson,
}

impl SolutionJson {
    pub fn new(s: &Solution) -> Self {
        let (expr, samples) = match &s.form {
            SolutionForm::Closed(e) => (Some(e.to_string()), 0),
            SolutionForm::Sampled(t) => (None, t.grid.len()),
        };
        let r = &s.residual;
        SolutionJson {
            name: s.name.clone(),
            provenance: s.provenance.as_str().into(),
            expr,
            samples,
            residual: SolutionResidualJson {
                symbolic: r.symbolic.as_ref().map(|e| e.to_string()),
                exact: r.exact(),
                max_abs: r.max_abs,
                max_relative: r.max_relative,
                points: r.points.len(),
                skipped: r.skipped,
            },
        }
    }
}
