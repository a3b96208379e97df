use std::fmt;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::{discriminant, FactorizationCandidate};
use crate::expr::{poly_sqrt, rational_sqrt, Bindings, Expr, Symbol, VarId};
use crate::operator::{DiffOperator, Linearity};

use super::{FactorError, SearchConfig};

const PROBE_POINTS: usize = 64;

/// Outcome of the principal-symbol pipeline for a second-order operator in
/// two variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeFactorization {
    /// `(g[2,2] + g[2,3])^2 - 4 g[2,1] g[2,4]`.
    pub delta: Expr,
    pub outcome: PdeOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PdeOutcome {
    /// `delta > 0`: one branch per root of the principal symbol.
    Split(Vec<PdeBranch>),
    /// `delta = 0`: the remaining equation for `Z = b[2,0,1]` is returned
    /// unsolved.
    Degenerate(Obligation),
}

impl PdeFactorization {
    /// Branches whose solvability residual vanishes identically.
    pub fn successes(&self) -> Vec<&PdeBranch> {
        match &self.outcome {
            PdeOutcome::Split(bs) => bs.iter().filter(|b| b.success()).collect(),
            PdeOutcome::Degenerate(_) => Vec::new(),
        }
    }
}

/// One root of the principal symbol with `Y = b[1,0,1]`, `Z = b[2,0,1]`
/// taken from the first-order equations.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeBranch {
    pub candidate: FactorizationCandidate,
    /// `g[0,1] - L(Z) - Y Z`, where `L = b[1,1,1] D_x1 + b[1,1,2] D_x2`.
    pub residual: Expr,
}

impl PdeBranch {
    pub fn success(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Leading parts of a double-root factorization and the equations `Z` has
/// to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    /// `[b[1,1,1], b[1,1,2]]`, the coefficients of `L`.
    pub l: [Expr; 2],
    /// `[b[2,1,1], b[2,1,2]]`.
    pub q2: [Expr; 2],
    /// Quasi-linear first-order equation in the symbol `b[2,0,1]`.
    pub equation: Expr,
    /// The remaining first-order condition, also in `b[2,0,1]`.
    pub compatibility: Expr,
    /// `Y` in terms of `b[2,0,1]`.
    pub y: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObligationCheck {
    pub equation_residual: Expr,
    pub compatibility_residual: Expr,
    pub candidate: FactorizationCandidate,
}

impl ObligationCheck {
    pub fn passes(&self) -> bool {
        self.equation_residual.is_zero() && self.compatibility_residual.is_zero()
    }
}

impl Obligation {
    pub fn z_symbol() -> Symbol {
        Symbol::new("b", vec![2, 0, 1], vec![VarId::x(1), VarId::x(2)])
    }

    /// Substitute a user-supplied `Z` into both equations.
    pub fn check(&self, z: &Expr) -> Result<ObligationCheck, FactorError> {
        let zs = Self::z_symbol();
        let put = |e: &Expr| e.subst_symbols(&|s| (*s == zs).then(|| z.clone()));
        let y = put(&self.y);
        Ok(ObligationCheck {
            equation_residual: put(&self.equation),
            compatibility_residual: put(&self.compatibility),
            candidate: pair(&self.l, &y, &self.q2, &z.simplify())?,
        })
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "L = ({}) D_x1 + ({}) D_x2", self.l[0], self.l[1])?;
        writeln!(f, "0 = {}", self.equation)?;
        write!(f, "0 = {}", self.compatibility)
    }
}

fn first_order(c: [&Expr; 3]) -> Result<DiffOperator, FactorError> {
    Ok(DiffOperator::from_terms(2, 1, Linearity::Linear, [(1, 1, c[0].clone()), (1, 2, c[1].clone()), (0, 1, c[2].clone())])?)
}

fn pair(q1: &[Expr; 2], y: &Expr, q2: &[Expr; 2], z: &Expr) -> Result<FactorizationCandidate, FactorError> {
    Ok(FactorizationCandidate::Scalar(vec![first_order([&q1[0], &q1[1], y])?, first_order([&q2[0], &q2[1], z])?]))
}

fn apply_l(l: &[Expr; 2], e: &Expr) -> Expr {
    (&l[0] * e.diff(VarId::x(1)) + &l[1] * e.diff(VarId::x(2))).simplify()
}

/// Sign of `delta` where it is not a perfect square: `Some(false)` when
/// every probe point is negative.
fn probe_positive(delta: &Expr, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..PROBE_POINTS).any(|_| {
        let b = Bindings::new().with(VarId::x(1), rng.gen_range(-1.0..=1.0)).with(VarId::x(2), rng.gen_range(-1.0..=1.0));
        delta.eval(&b).is_ok_and(|v: f64| v >= 0.0)
    })
}

/// Split `P` into `(b111 D_x1 + b112 D_x2 + Y)(b211 D_x1 + b212 D_x2 + Z)`
/// in the gauge `b111 = g[2,1]`, `b211 = 1`, or along `x2` when `g[2,1]`
/// vanishes.
pub fn factor_pde_second_order(op: &DiffOperator, cfg: &SearchConfig) -> Result<PdeFactorization, FactorError> {
    if op.n() != 2 || op.m() != 1 || op.order() != 2 {
        return Err(FactorError::UnsupportedTemplate(format!(
            "expected a scalar second-order operator in two variables, got n = {}, m = {}, order {}",
            op.n(),
            op.m(),
            op.order()
        )));
    }
    if op.references_dependent() {
        return Err(FactorError::UnsupportedTemplate("no search for quasi-linear operators".into()));
    }
    let g = |k, h| op.g(k, h).simplify();
    let s = (g(2, 2) + g(2, 3)).simplify();
    let (g21, g24) = (g(2, 1), g(2, 4));
    let delta = discriminant(op);

    let sqrt_delta = match delta.as_const() {
        Some(c) if c.is_negative() => {
            return Err(FactorError::NoRealFactorization(format!("discriminant {delta} < 0")));
        }
        Some(c) => match rational_sqrt(c) {
            Some(r) => Expr::constant(r),
            None => return Err(FactorError::NonPolynomialSqrtDelta(delta)),
        },
        None => match poly_sqrt(&delta) {
            Some(r) => r,
            None if !probe_positive(&delta, cfg.seed) => {
                return Err(FactorError::NoRealFactorization(format!("discriminant {delta} is negative at every probe point")));
            }
            None => return Err(FactorError::NonPolynomialSqrtDelta(delta)),
        },
    };

    // Gauge axis `a` carries b1a = A, b2a = 1; X = b2o solves A X^2 - S X + C = 0.
    let mut roots: Vec<(usize, Expr)> = Vec::new();
    let two = Expr::int(2);
    if !g21.is_zero() || !g24.is_zero() {
        let (a, lead) = if g21.is_zero() { (2, &g24) } else { (1, &g21) };
        let minus = ((&s - &sqrt_delta) / (&two * lead)).simplify();
        roots.push((a, minus.clone()));
        let plus = ((&s + &sqrt_delta) / (&two * lead)).simplify();
        if plus != minus && cfg.allow_swap {
            roots.push((a, plus));
        }
    } else {
        roots.push((1, Expr::zero()));
        if cfg.allow_swap {
            roots.push((2, Expr::zero()));
        }
    }

    let mut branches = Vec::new();
    for (a, x) in roots {
        let o = 3 - a;
        let lead = if a == 1 { &g21 } else { &g24 };
        let mut q1 = [Expr::zero(), Expr::zero()];
        let mut q2 = [Expr::zero(), Expr::zero()];
        q1[a - 1] = lead.clone();
        q2[a - 1] = Expr::one();
        q1[o - 1] = (&s - lead * &x).simplify();
        q2[o - 1] = x;
        let r_a = (g(1, a) - apply_l(&q1, &q2[a - 1])).simplify();
        let r_o = (g(1, o) - apply_l(&q1, &q2[o - 1])).simplify();
        let (g01, zsym) = (g(0, 1), Expr::sym(Obligation::z_symbol()));
        if delta.is_zero() {
            let y = ((&r_a - &q1[a - 1] * &zsym) / &q2[a - 1]).simplify();
            let equation = (apply_l(&q1, &zsym) + &y * &zsym - &g01).simplify();
            let compatibility = (&r_o - &q2[o - 1] * &y - &q1[o - 1] * &zsym).simplify();
            return Ok(PdeFactorization {
                delta,
                outcome: PdeOutcome::Degenerate(Obligation { l: q1, q2, equation, compatibility, y }),
            });
        }
        // [q2a q1a; q2o q1o] [Y; Z] = [r_a; r_o]
        let det = (&q2[a - 1] * &q1[o - 1] - &q1[a - 1] * &q2[o - 1]).simplify();
        let y = ((&r_a * &q1[o - 1] - &q1[a - 1] * &r_o) / &det).simplify();
        let z = ((&q2[a - 1] * &r_o - &q2[o - 1] * &r_a) / &det).simplify();
        let residual = (&g01 - apply_l(&q1, &z) - &y * &z).simplify();
        branches.push(PdeBranch { candidate: pair(&q1, &y, &q2, &z)?, residual });
    }
    Ok(PdeFactorization { delta, outcome: PdeOutcome::Split(branches) })
}
