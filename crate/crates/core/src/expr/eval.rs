//! Floating-point evaluation and the randomized zero probe.

use std::collections::HashMap;

use num_traits::{Float, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Expr, ExprError, Func, Node, Symbol, VarId};
use crate::Rational;

/// Values for variables and coefficient symbols.
#[derive(Debug, Clone, Default)]
pub struct Bindings<F> {
    vars: HashMap<VarId, F>,
    syms: HashMap<Symbol, F>,
}

impl<F: Float> Bindings<F> {
    pub fn new() -> Self {
        Bindings { vars: HashMap::new(), syms: HashMap::new() }
    }

    pub fn with(mut self, v: VarId, value: F) -> Self {
        self.vars.insert(v, value);
        self
    }

    pub fn set(&mut self, v: VarId, value: F) {
        self.vars.insert(v, value);
    }

    pub fn set_symbol(&mut self, s: Symbol, value: F) {
        self.syms.insert(s, value);
    }

    pub fn get(&self, v: VarId) -> Option<F> {
        self.vars.get(&v).copied()
    }
}

impl<const N: usize, F: Float> From<[(VarId, F); N]> for Bindings<F> {
    fn from(pairs: [(VarId, F); N]) -> Self {
        let mut b = Bindings::new();
        for (v, x) in pairs {
            b.set(v, x);
        }
        b
    }
}

fn rational_to<F: Float>(c: &Rational) -> F {
    F::from(c.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(F::nan)
}

fn domain(msg: &str) -> ExprError {
    ExprError::DomainError(msg.to_string())
}

impl Expr {
    /// Evaluate with exact constants converted at the leaves.
    pub fn eval<F: Float>(&self, b: &Bindings<F>) -> Result<F, ExprError> {
        match self.node() {
            Node::Const(c) => Ok(rational_to(c)),
            Node::Var(v) => b.vars.get(v).copied().ok_or(ExprError::UnboundVariable(*v)),
            Node::Sym(s) => b
                .syms
                .get(s)
                .copied()
                .ok_or_else(|| ExprError::UnboundSymbol(s.to_string())),
            Node::Sum(ts) => ts.iter().try_fold(F::zero(), |acc, t| Ok(acc + t.eval(b)?)),
            Node::Product(fs) => fs.iter().try_fold(F::one(), |acc, t| Ok(acc * t.eval(b)?)),
            Node::Power(base, k) => {
                let x = base.eval(b)?;
                if *k < 0 && x.abs() < tiny() {
                    return Err(domain("negative power of zero"));
                }
                let k = i32::try_from(*k).map_err(|_| domain("exponent out of range"))?;
                Ok(x.powi(k))
            }
            Node::Div(num, den) => {
                let d = den.eval(b)?;
                if d.abs() < tiny() {
                    return Err(domain("division by a value of magnitude below 1e-300"));
                }
                Ok(num.eval(b)? / d)
            }
            Node::Fun(f, a) => {
                let x = a.eval(b)?;
                match f {
                    Func::Exp => Ok(x.exp()),
                    Func::Log if x <= F::zero() => Err(domain("log of a non-positive value")),
                    Func::Log => Ok(x.ln()),
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Sqrt if x < F::zero() => Err(domain("sqrt of a negative value")),
                    Func::Sqrt => Ok(x.sqrt()),
                }
            }
        }
    }

    /// Evaluate and also return the sum of absolute values of the top-level
    /// summands, a scale for relative residuals.
    pub fn eval_with_scale<F: Float>(&self, b: &Bindings<F>) -> Result<(F, F), ExprError> {
        match self.node() {
            Node::Sum(ts) => {
                let mut value = F::zero();
                let mut scale = F::zero();
                for t in ts {
                    let v = t.eval(b)?;
                    value = value + v;
                    scale = scale + v.abs();
                }
                Ok((value, scale))
            }
            _ => {
                let v = self.eval(b)?;
                Ok((v, v.abs()))
            }
        }
    }
}

fn tiny<F: Float>() -> F {
    F::from(1e-300).unwrap_or_else(F::min_positive_value)
}

/// Outcome of evaluating an expression that should vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    /// Every evaluable point gave a relative value within tolerance.
    Vanishes { max_relative: f64, points: usize },
    /// Some point gave a relative value above tolerance.
    NonZero { max_relative: f64 },
    /// No sample point could be evaluated.
    Inconclusive,
}

impl ProbeOutcome {
    pub fn vanishes(&self) -> bool {
        matches!(self, ProbeOutcome::Vanishes { .. })
    }
}

/// Evaluate `e` at `points` random bindings of its variables and symbols,
/// drawn from `[0.25, 1.75]` to stay clear of common singularities, and
/// compare against zero with relative tolerance `tol`. The relative value is
/// `|e| / max(1, sum of |summands|)`.
pub fn probe_zero(e: &Expr, seed: u64, points: usize, tol: f64) -> ProbeOutcome {
    let vars = e.explicit_variables();
    let syms = e.symbols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for _ in 0..points * 4 {
        if evaluated == points {
            break;
        }
        let mut b = Bindings::<f64>::new();
        for v in &vars {
            b.set(*v, rng.gen_range(0.25..1.75));
        }
        for s in &syms {
            b.set_symbol(s.clone(), rng.gen_range(0.25..1.75));
        }
        let Ok((value, scale)) = e.eval_with_scale(&b) else { continue };
        if !value.is_finite() {
            continue;
        }
        evaluated += 1;
        worst = worst.max(value.abs() / scale.max(1.0));
    }
    if evaluated == 0 {
        ProbeOutcome::Inconclusive
    } else if worst > tol {
        ProbeOutcome::NonZero { max_relative: worst }
    } else {
        ProbeOutcome::Vanishes { max_relative: worst, points: evaluated }
    }
}

/// Symbolic zero test with a numeric cross-check.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTest {
    /// The canonical form is the zero constant. This alone decides.
    pub is_zero: bool,
    pub probe: ProbeOutcome,
    /// Canonical form and probe disagree.
    pub discrepancy: bool,
}

/// Zero test on the canonical form, probed at 8 points with relative
/// tolerance 1e-9.
pub fn zero_test(e: &Expr, seed: u64) -> ZeroTest {
    let canonical = e.simplify();
    let is_zero = canonical.is_zero();
    let probe = probe_zero(e, seed, 8, 1e-9);
    let discrepancy = match probe {
        ProbeOutcome::Inconclusive => false,
        ProbeOutcome::Vanishes { .. } => !is_zero,
        ProbeOutcome::NonZero { .. } => is_zero,
    };
    ZeroTest { is_zero, probe, discrepancy }
}
