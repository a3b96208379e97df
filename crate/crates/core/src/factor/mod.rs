//! Factorization search for the tractable scalar classes: constant
//! coefficient ODEs, variable coefficient ODEs through a polynomial ansatz
//! for the Riccati equation in `Y = b[2,0,1]`, and second-order operators in
//! two variables through the principal symbol.
//!
//! All searches work in the gauge `b[1,1,1] = g[2,1]`, `b[2,1,1] = 1`.

mod pde;
mod riccati;
mod roots;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::conditions::FactorizationCandidate;
use crate::expr::{Expr, VarId};
use crate::operator::{DiffOperator, Linearity, OperatorError};
use crate::Rational;

pub use pde::{factor_pde_second_order, Obligation, ObligationCheck, PdeBranch, PdeFactorization, PdeOutcome};
pub use riccati::{solve_riccati_ansatz, RiccatiProblem};
pub use roots::rational_roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Highest polynomial degree tried for `Y`.
    pub ansatz_degree: usize,
    /// Return both factor orders where the search finds them.
    pub allow_swap: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { ansatz_degree: 3, allow_swap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("NoRealFactorization: {0}")]
    NoRealFactorization(String),
    #[error("NotConstant: coefficient {0} is not constant")]
    NotConstant(String),
    #[error("NonPolynomialCoefficients: {0}")]
    NonPolynomialCoefficients(String),
    #[error("NonPolynomialSqrtDelta: the square root of {0} is not a polynomial")]
    NonPolynomialSqrtDelta(Expr),
    #[error("UnsupportedTemplate: {0}")]
    UnsupportedTemplate(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// `lead D + rest` in one variable.
pub(crate) fn first_order_ode(lead: Expr, rest: Expr) -> Result<DiffOperator, OperatorError> {
    let lin = if lead.depends_on(VarId::u(1)) || rest.depends_on(VarId::u(1)) {
        Linearity::QuasiLinear
    } else {
        Linearity::Linear
    };
    DiffOperator::from_terms(1, 1, lin, [(1, 1, lead), (0, 1, rest)])
}

fn require_linear_ode(op: &DiffOperator) -> Result<(), FactorError> {
    if op.n() != 1 || op.m() != 1 || op.order() != 2 {
        return Err(FactorError::UnsupportedTemplate(format!(
            "expected a scalar second-order ODE, got n = {}, m = {}, order {}",
            op.n(),
            op.m(),
            op.order()
        )));
    }
    if op.references_dependent() {
        return Err(FactorError::UnsupportedTemplate("no search for quasi-linear operators".into()));
    }
    Ok(())
}

/// Splits of `g21 D^2 + g11 D + g01` with constant `g` into
/// `(g21 D + X)(D + Y)`, where `Y` solves `g21 Y^2 - g11 Y + g01 = 0` and
/// `X = g11 - g21 Y`. Irrational roots are kept as exact square roots.
pub fn factor_constant(op: &DiffOperator, cfg: &SearchConfig) -> Result<Vec<FactorizationCandidate>, FactorError> {
    require_linear_ode(op)?;
    let mut g = Vec::new();
    for (k, name) in [(2, "g[2,1]"), (1, "g[1,1]"), (0, "g[0,1]")] {
        let c = op.g(k, 1).simplify();
        match c.as_const() {
            Some(r) => g.push(r.clone()),
            None => return Err(FactorError::NotConstant(name.into())),
        }
    }
    let (g21, g11, g01) = (&g[0], &g[1], &g[2]);
    let delta = g11 * g11 - Rational::from_integer(4.into()) * g21 * g01;
    if delta.is_negative() {
        return Err(FactorError::NoRealFactorization(format!("discriminant {delta} < 0")));
    }
    let two_a = Expr::constant(g21 * Rational::from_integer(2.into()));
    let b = Expr::constant(g11.clone());
    let sq = Expr::sqrt(Expr::constant(delta.clone())).simplify();
    // ascending Y for g21 > 0
    let sign = if g21.is_negative() { -1 } else { 1 };
    let mut ys = vec![((b.clone() - Expr::int(sign) * sq.clone()) / two_a.clone()).simplify()];
    if !delta.is_zero() && cfg.allow_swap {
        ys.push(((b + Expr::int(sign) * sq) / two_a).simplify());
    }
    let lead = Expr::constant(g21.clone());
    ys.into_iter()
        .map(|y| {
            let x = (Expr::constant(g11.clone()) - lead.clone() * y.clone()).simplify();
            Ok(FactorizationCandidate::Scalar(vec![first_order_ode(lead.clone(), x)?, first_order_ode(Expr::one(), y)?]))
        })
        .collect()
}

/// Constant coefficients go to [`factor_constant`], everything else to the
/// Riccati ansatz. An empty list means the ansatz found nothing.
pub fn factor_ode(op: &DiffOperator, cfg: &SearchConfig) -> Result<Vec<FactorizationCandidate>, FactorError> {
    require_linear_ode(op)?;
    if (0..=2).all(|k| op.g(k, 1).simplify().as_const().is_some()) {
        return factor_constant(op, cfg);
    }
    let prob = RiccatiProblem::new(op)?;
    let ys = solve_riccati_ansatz(&prob, cfg)?;
    ys.iter().map(|y| prob.candidate(y)).collect()
}
