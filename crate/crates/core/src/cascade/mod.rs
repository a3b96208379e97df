//! Particular solutions from a two-factor factorization `P = Q1 Q2`:
//! `u0` with `Q2 u0 = 0`, `v1` with `Q1 v1 = 0`, and `u1` with
//! `Q2 u1 = v1`. Both `u0` and `u1` then solve `P u = 0`.
//!
//! Scalar ODEs get closed forms where the antiderivative table applies and
//! quadrature otherwise; systems are integrated with RK4.

mod integrate;
mod ode;
mod system;

use std::fmt;

use num_traits::Float;
use thiserror::Error;

use crate::conditions::{ConditionsError, Operator};
use crate::expr::{Bindings, Expr, ExprError, VarId};
use crate::operator::{DiffOperator, OperatorError};
use crate::Rational;

pub use integrate::{antiderivative, Antiderivative};
pub use ode::cascade_ode;
pub use system::cascade_system_numeric;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("SingularLeadingCoefficient: leading coefficient vanishes at x = {0}")]
    SingularLeadingCoefficient(f64),
    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(String),
    #[error("StepCountTooSmall: {0} steps, at least {min} needed", min = MIN_STEPS)]
    StepCountTooSmall(usize),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Domain(#[from] ExprError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Conditions(#[from] ConditionsError),
}

pub const MIN_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOptions {
    pub interval: (f64, f64),
    /// Verification points for closed forms, spread evenly over the interval.
    pub grid_points: usize,
    /// Quadrature and RK4 steps.
    pub steps: usize,
    /// Integration constant of the quasi-linear `u0`.
    pub constant: Rational,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions { interval: (-1.0, 1.0), grid_points: 32, steps: 1024, constant: Rational::from_integer(1.into()) }
    }
}

impl CascadeOptions {
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.interval.0, self.interval.1, self.grid_points.max(2) - 1)
    }
}

/// `steps + 1` evenly spaced points from `a` to `b`, ending exactly at `b`.
pub fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    let h = (b - a) / steps as f64;
    (0..=steps).map(|i| if i == steps { b } else { a + h * i as f64 }).collect()
}

/// Values of `m` components on a grid; `values[i][q]` is component `q` at
/// `grid[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F> {
    pub grid: Vec<F>,
    pub values: Vec<Vec<F>>,
}

impl<F: Float + fmt::LowerExp> Trajectory<F> {
    pub fn components(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Header `x,u1,...,um`, one row per grid point, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for q in 1..=self.components() {
            out.push_str(&format!(",u{q}"));
        }
        out.push('\n');
        for (x, row) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{x:.16e}"));
            for v in row {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionForm {
    Closed(Expr),
    Sampled(Trajectory<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Rk4,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Quadrature => "quadrature",
            Provenance::Rk4 => "rk4",
        }
    }
}

/// Residual of an operator applied to a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `P u` in closed form, when `u` is closed form.
    pub symbolic: Option<Expr>,
    pub points: Vec<Vec<f64>>,
    /// Largest absolute row residual at each point.
    pub values: Vec<f64>,
    pub max_abs: f64,
    /// `max |P u| / max(1, sum of |terms|)` over points and rows.
    pub max_relative: f64,
    /// Points where `u` or a coefficient could not be evaluated.
    pub skipped: usize,
}

impl ResidualReport {
    /// Symbolic residual identically zero.
    pub fn exact(&self) -> bool {
        self.symbolic.as_ref().is_some_and(Expr::is_zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// `u0`, `v1`, `u1`, with a column suffix `[j]` for systems.
    pub name: String,
    pub form: SolutionForm,
    pub provenance: Provenance,
    /// Against `P` for `u0` and `u1`, against `Q1` for `v1`.
    pub residual: ResidualReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSolution {
    pub solutions: Vec<Solution>,
}

impl CascadeSolution {
    pub fn get(&self, name: &str) -> Option<&Solution> {
        self.solutions.iter().find(|s| s.name == name)
    }
}

fn along(e: &Expr, d: &crate::jet::DerivIndex) -> Expr {
    d.axes().into_iter().fold(e.clone(), |acc, a| acc.diff(VarId::x(a)))
}

fn bindings(point: &[f64]) -> Bindings<f64> {
    let mut b = Bindings::new();
    for (i, x) in point.iter().enumerate() {
        b.set(VarId::x(i + 1), *x);
    }
    b
}

/// Apply `op` to a closed-form scalar `u` symbolically, then sample the
/// terms at `points`.
fn verify_closed(op: &DiffOperator, u: &Expr, points: &[Vec<f64>]) -> Result<ResidualReport, CascadeError> {
    let put_u = |c: &Expr| c.subst(VarId::u(1), u);
    let terms: Vec<Expr> = op.coeffs().map(|(d, c)| (put_u(c) * along(u, d)).simplify()).collect();
    let symbolic = Expr::sum(terms.clone()).simplify();
    let mut report = ResidualReport {
        symbolic: Some(symbolic),
        points: Vec::new(),
        values: Vec::new(),
        max_abs: 0.0,
        max_relative: 0.0,
        skipped: 0,
    };
    for p in points {
        let b = bindings(p);
        let vals: Result<Vec<f64>, ExprError> = terms.iter().map(|t| t.eval(&b)).collect();
        match vals {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                let sum: f64 = v.iter().sum();
                let scale: f64 = v.iter().map(|x| x.abs()).sum();
                report.record(p.clone(), sum.abs(), sum.abs() / scale.max(1.0));
            }
            Ok(_) | Err(ExprError::DivisionByZero) | Err(ExprError::DomainError(_)) => report.skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}

impl ResidualReport {
    fn empty() -> Self {
        ResidualReport { symbolic: None, points: Vec::new(), values: Vec::new(), max_abs: 0.0, max_relative: 0.0, skipped: 0 }
    }

    fn record(&mut self, point: Vec<f64>, abs: f64, rel: f64) {
        self.points.push(point);
        self.values.push(abs);
        self.max_abs = self.max_abs.max(abs);
        self.max_relative = self.max_relative.max(rel);
    }
}

fn rows(op: &Operator) -> Vec<Vec<&DiffOperator>> {
    match op {
        Operator::Scalar(o) => vec![vec![o]],
        Operator::Matrix(o) => o.rows().iter().map(|r| r.iter().collect()).collect(),
    }
}

/// Residual on the interior of a trajectory grid with central differences.
fn verify_sampled(op: &Operator, t: &Trajectory<f64>) -> Result<ResidualReport, CascadeError> {
    if op.n() != 1 {
        return Err(CascadeError::NotApplicable("sampled solutions need one independent variable".into()));
    }
    let rows = rows(op);
    if t.components() != rows.len() {
        return Err(CascadeError::NotApplicable(format!(
            "trajectory has {} components, operator has {} rows",
            t.components(),
            rows.len()
        )));
    }
    if rows.iter().flatten().any(|e| e.order() > 2) {
        return Err(CascadeError::NotApplicable("finite differences cover order 2 at most".into()));
    }
    let mut report = ResidualReport::empty();
    let n = t.grid.len();
    if n < 3 {
        return Err(CascadeError::StepCountTooSmall(n.saturating_sub(1)));
    }
    for i in 1..n - 1 {
        let x = t.grid[i];
        let h = (t.grid[i + 1] - t.grid[i - 1]) / 2.0;
        let mut b = Bindings::new().with(VarId::x(1), x);
        for (q, v) in t.values[i].iter().enumerate() {
            b.set(VarId::u(q + 1), *v);
        }
        let derivs = |q: usize| {
            let (l, c, r) = (t.values[i - 1][q], t.values[i][q], t.values[i + 1][q]);
            [c, (r - l) / (2.0 * h), (r - 2.0 * c + l) / (h * h)]
        };
        let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
        let mut ok = true;
        for row in &rows {
            let (mut sum, mut scale) = (0.0, 0.0);
            for (q, entry) in row.iter().enumerate() {
                let d = derivs(q);
                for (ix, c) in entry.coeffs() {
                    match c.eval(&b) {
                        Ok(cv) if cv.is_finite() => {
                            let term = cv * d[ix.order()];
                            sum += term;
                            scale += term.abs();
                        }
                        _ => ok = false,
                    }
                }
            }
            worst_abs = worst_abs.max(sum.abs());
            worst_rel = worst_rel.max(sum.abs() / f64::max(scale, 1.0));
        }
        if ok {
            report.record(vec![x], worst_abs, worst_rel);
        } else {
            report.skipped += 1;
        }
    }
    Ok(report)
}

/// Residual of `op` applied to `u`: symbolic plus sampled at `points` for
/// closed forms, central differences on the grid for trajectories.
pub fn verify_solution(op: &Operator, u: &SolutionForm, points: &[Vec<f64>]) -> Result<ResidualReport, CascadeError> {
    match (op, u) {
        (Operator::Scalar(o), SolutionForm::Closed(e)) => verify_closed(o, e, points),
        (Operator::Matrix(_), SolutionForm::Closed(_)) => {
            Err(CascadeError::NotApplicable("closed-form solutions are scalar".into()))
        }
        (_, SolutionForm::Sampled(t)) => verify_sampled(op, t),
    }
}
