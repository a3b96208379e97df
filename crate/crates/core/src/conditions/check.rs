//! Checking a candidate factorization against an operator.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_conditions, ConditionSystem, ConditionsError, FactorizationCandidate, Operator, Template};
use super::taylor::{self, Layout, Taylor};
use crate::expr::Expr;
use crate::operator::{DiffOperator, JetMonomial, Linearity, MatrixOperator};
use crate::Rational;

/// Settings of the numeric cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Sample points in `[-1, 1]^n`.
    pub samples: usize,
    /// Relative tolerance of the numeric layer.
    pub tol: f64,
    pub seed: u64,
    /// Total degree of the random polynomial test functions.
    pub test_degree: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { samples: 8, tol: 1e-9, seed: 0, test_degree: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Non-zero difference `P - product` on one jet monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermResidual {
    pub entry: (usize, usize),
    pub monomial: JetMonomial,
    pub residual: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionResidual {
    /// The generated equation, `lhs = rhs`.
    pub equation: String,
    pub residual: Expr,
}

impl ConditionResidual {
    pub fn is_zero(&self) -> bool {
        self.residual.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericCheck {
    pub max_relative: f64,
    pub points: usize,
    pub within_tol: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    /// `Pass` iff the re-expansion residual is identically zero.
    pub verdict: Verdict,
    /// Every non-zero term of `P - expand(candidate)`.
    pub terms: Vec<TermResidual>,
    /// Template conditions with concrete coefficients substituted, when the
    /// candidate is a pair of first-order factors of a supported setting.
    pub template: Option<Template>,
    pub conditions: Option<Vec<ConditionResidual>>,
    /// Advisory; `None` when the coefficients could not be evaluated.
    pub numeric: Option<NumericCheck>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `(zero residuals, total)` over the template conditions.
    pub fn condition_tally(&self) -> Option<(usize, usize)> {
        self.conditions.as_ref().map(|cs| (cs.iter().filter(|c| c.is_zero()).count(), cs.len()))
    }
}

/// Compare `op` with the product of `cand`. The verdict comes from the
/// canonical jet-space difference; template conditions and the numeric
/// probe are reported alongside.
pub fn check_candidate(
    op: &Operator,
    cand: &FactorizationCandidate,
    opts: &CheckOptions,
) -> Result<CheckReport, ConditionsError> {
    if op.is_matrix() != cand.is_matrix() || cand.n() != Some(op.n()) || cand.m() != Some(op.m()) {
        return Err(ConditionsError::ShapeMismatch(format!(
            "operator (n, m) = ({}, {}) against a candidate with (n, m) = ({:?}, {:?})",
            op.n(),
            op.m(),
            cand.n(),
            cand.m()
        )));
    }
    let expanded = cand.expand()?;
    let given = op.jet_grid();
    let mut terms = Vec::new();
    for (p, (erow, grow)) in expanded.iter().zip(&given).enumerate() {
        for (q, (e, g)) in erow.iter().zip(grow).enumerate() {
            for (mono, c) in g.sub(e).terms() {
                terms.push(TermResidual { entry: (p + 1, q + 1), monomial: mono.clone(), residual: c.clone() });
            }
        }
    }
    let verdict = if terms.is_empty() { Verdict::Pass } else { Verdict::Fail };

    let lin = if op.linearity() == Linearity::Linear && cand.linearity() == Linearity::Linear {
        Linearity::Linear
    } else {
        Linearity::QuasiLinear
    };
    let second_order = given.iter().enumerate().all(|(p, row)| {
        row.iter().enumerate().all(|(q, e)| e.max_order() <= if p == q { 2 } else { 1 })
    });
    let template = (cand.is_first_order_pair() && second_order)
        .then(|| Template::classify(lin, op.is_matrix(), op.n()))
        .flatten();
    let conditions = match template {
        Some(t) => {
            let system = cached_conditions(t, op.m())?;
            Some(
                system
                    .equations()
                    .iter()
                    .map(|c| ConditionResidual { equation: system.equation_text(c), residual: c.residual(op, cand) })
                    .collect(),
            )
        }
        None => None,
    };
    let numeric = numeric_check(op, cand, opts);
    Ok(CheckReport { verdict, terms, template, conditions, numeric })
}

fn cached_conditions(t: Template, m: usize) -> Result<Arc<ConditionSystem>, ConditionsError> {
    static CACHE: OnceLock<Mutex<HashMap<(Template, usize), Arc<ConditionSystem>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("cache lock").get(&(t, m)) {
        return Ok(s.clone());
    }
    let s = Arc::new(derive_conditions(t, t.n(), m)?);
    cache.lock().expect("cache lock").insert((t, m), s.clone());
    Ok(s)
}

fn random_test_function(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> Expr {
    let mut terms = Vec::new();
    let mut exps = vec![0usize; n];
    loop {
        if exps.iter().sum::<usize>() <= degree {
            // Uniform on [-2, 2] in steps of 1/1024, exact as a rational.
            let c = Rational::new(BigInt::from(rng.gen_range(-2048i64..=2048)), BigInt::from(1024));
            let mono = exps.iter().enumerate().map(|(i, &e)| Expr::x(i + 1).pow(e as i64));
            terms.push(Expr::product(std::iter::once(Expr::constant(c)).chain(mono)));
        }
        let mut i = 0;
        loop {
            if i == n {
                return Expr::sum(terms).simplify();
            }
            exps[i] += 1;
            if exps[i] <= degree {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

fn operator_order(op: &Operator) -> usize {
    match op {
        Operator::Scalar(o) => o.order(),
        Operator::Matrix(o) => o.order_profile().into_iter().flatten().max().unwrap_or(0),
    }
}

fn candidate_order(cand: &FactorizationCandidate) -> usize {
    match cand {
        FactorizationCandidate::Scalar(fs) => fs.iter().map(|f| f.order()).sum(),
        FactorizationCandidate::Matrix(fs) => {
            fs.iter().map(|f| f.order_profile().into_iter().flatten().max().unwrap_or(0)).sum()
        }
    }
}

/// `(P u, Q1 (Q2 u))` per row at one point.
fn sample(op: &Operator, cand: &FactorizationCandidate, x: &[Taylor], us: &[Taylor]) -> Option<Vec<(f64, f64)>> {
    let lhs: Vec<Taylor> = match op {
        Operator::Scalar(o) => vec![taylor::apply(o, &us[0], x, us)?],
        Operator::Matrix(o) => mat_apply(o, us, x, us)?,
    };
    let rhs: Vec<Taylor> = match cand {
        FactorizationCandidate::Scalar(fs) => {
            let mut v = us[0].clone();
            for f in fs.iter().rev() {
                v = taylor::apply(f, &v, x, us)?;
            }
            vec![v]
        }
        FactorizationCandidate::Matrix(fs) => {
            let mut v = us.to_vec();
            for f in fs.iter().rev() {
                v = mat_apply(f, &v, x, us)?;
            }
            v
        }
    };
    Some(lhs.iter().zip(&rhs).map(|(a, b)| (a.value(), b.value())).collect())
}

fn mat_apply(op: &MatrixOperator, args: &[Taylor], x: &[Taylor], us: &[Taylor]) -> Option<Vec<Taylor>> {
    (1..=op.m())
        .map(|p| {
            let mut parts = (1..=op.m()).map(|q| taylor::apply(op.entry(p, q), &args[q - 1], x, us));
            let first = parts.next()??;
            parts.try_fold(first, |acc, t| Some(acc.add(&t?)))
        })
        .collect()
}

/// `max |P u - Q1 (Q2 u)| / max(1, |P u|, |Q1 (Q2 u)|)` over random
/// polynomial `u` and random points, evaluated with truncated Taylor
/// series rather than the symbolic expansion.
fn numeric_check(op: &Operator, cand: &FactorizationCandidate, opts: &CheckOptions) -> Option<NumericCheck> {
    if opts.samples == 0 {
        return None;
    }
    let (n, m) = (op.n(), op.m());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let test: Vec<Expr> = (0..m).map(|_| random_test_function(&mut rng, n, opts.test_degree)).collect();
    let layout = Layout::new(n, operator_order(op).max(candidate_order(cand)));
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for _ in 0..opts.samples * 4 {
        if points == opts.samples {
            break;
        }
        let x: Vec<Taylor> = (1..=n).map(|i| Taylor::variable(&layout, rng.gen_range(-1.0..=1.0), i)).collect();
        let us: Vec<Taylor> = test.iter().map(|u| taylor::eval(u, &x, &[])).collect::<Option<_>>()?;
        let Some(rows) = sample(op, cand, &x, &us) else {
            if has_symbols(op, cand) {
                return None;
            }
            continue;
        };
        if rows.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            continue;
        }
        points += 1;
        for (a, b) in rows {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    (points > 0).then_some(NumericCheck { max_relative: worst, points, within_tol: worst <= opts.tol })
}

fn has_symbols(op: &Operator, cand: &FactorizationCandidate) -> bool {
    let ops: Vec<&DiffOperator> = match (op, cand) {
        (Operator::Scalar(o), FactorizationCandidate::Scalar(fs)) => std::iter::once(o).chain(fs).collect(),
        (Operator::Matrix(o), FactorizationCandidate::Matrix(fs)) => {
            o.rows().iter().flatten().chain(fs.iter().flat_map(|f| f.rows().iter().flatten())).collect()
        }
        _ => return true,
    };
    ops.iter().any(|o| o.coeffs().any(|(_, c)| c.has_symbols()))
}
