//! Immutable symbolic expressions with exact rational constants.
//!
//! Expressions are built with the constructors and arithmetic operators
//! below, which do no algebra beyond flattening. [`Expr::simplify`] brings an
//! expression into canonical form; see [`canon`] for what that means.
//!
//! Besides independent variables `x_i`, dependent variables `u^j` and jet
//! variables `u^j_(k,h)`, an expression may contain opaque coefficient
//! symbols such as `b[1,1,1]` (a function of a declared argument list) and
//! their partial derivatives. These carry the unknown coefficients of
//! operator factors when condition systems are derived.

mod calculus;
mod canon;
mod eval;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::DerivIndex;
use crate::Rational;

pub use canon::{exact_quotient, poly_sqrt, rational_sqrt};
pub use eval::{probe_zero, zero_test, Bindings, ProbeOutcome, ZeroTest};
pub use parse::{parse_expr, parse_expr_with, ParseError, SymbolResolver};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unbound variable {0}")]
    UnboundVariable(VarId),
    #[error("unbound symbol {0}")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("division by the zero constant")]
    DivisionByZero,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A variable that may occur in an expression. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarId {
    /// Independent variable `x^i`.
    Indep(usize),
    /// Dependent variable `u^j`.
    Dep(usize),
    /// Jet coordinate `u^j_(k,h)` with `k >= 1`.
    Jet(usize, DerivIndex),
}

impl VarId {
    pub fn x(i: usize) -> Self {
        VarId::Indep(i)
    }

    pub fn u(j: usize) -> Self {
        VarId::Dep(j)
    }

    /// Jet coordinate of component `j`; order zero collapses to `u^j`.
    pub fn jet(j: usize, d: DerivIndex) -> Self {
        if d.is_identity() {
            VarId::Dep(j)
        } else {
            VarId::Jet(j, d)
        }
    }

    pub fn is_dependent(&self) -> bool {
        matches!(self, VarId::Dep(_))
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, VarId::Jet(..))
    }

    pub(crate) fn fmt_styled(&self, f: &mut fmt::Formatter<'_>, scalar: bool) -> fmt::Result {
        match self {
            VarId::Indep(i) => write!(f, "x{i}"),
            VarId::Dep(j) if scalar && *j == 1 => write!(f, "u"),
            VarId::Dep(j) => write!(f, "u{j}"),
            VarId::Jet(j, d) if scalar && *j == 1 => write!(f, "u_{{{d}}}"),
            VarId::Jet(j, d) => write!(f, "u{j}_{{{d}}}"),
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_styled(f, false)
    }
}

/// An opaque coefficient function such as `b[2,1,1](x, u)`, possibly
/// differentiated. `args` lists the variables it depends on; derivatives
/// along anything else vanish.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    name: String,
    indices: Vec<usize>,
    derivs: Vec<VarId>,
    args: Vec<VarId>,
}

impl Symbol {
    pub fn new(name: impl Into<String>, indices: Vec<usize>, args: Vec<VarId>) -> Self {
        Symbol { name: name.into(), indices, derivs: Vec::new(), args }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn args(&self) -> &[VarId] {
        &self.args
    }

    /// Partial derivatives taken so far, sorted.
    pub fn derivs(&self) -> &[VarId] {
        &self.derivs
    }

    /// The undifferentiated symbol.
    pub fn base(&self) -> Symbol {
        Symbol { derivs: Vec::new(), ..self.clone() }
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.args.contains(&v)
    }

    /// `None` when the symbol does not depend on `v`.
    pub fn differentiated(&self, v: VarId) -> Option<Symbol> {
        if !self.depends_on(v) {
            return None;
        }
        let mut s = self.clone();
        let pos = s.derivs.partition_point(|d| *d <= v);
        s.derivs.insert(pos, v);
        Some(s)
    }

    fn fmt_styled(&self, f: &mut fmt::Formatter<'_>, scalar: bool) -> fmt::Result {
        if !self.derivs.is_empty() {
            write!(f, "d(")?;
        }
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{}[{}]", self.name, idx.join(","))?;
        if !self.derivs.is_empty() {
            for d in &self.derivs {
                write!(f, ", ")?;
                d.fmt_styled(f, scalar)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_styled(f, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Expression node. The variant order fixes the total order used to sort
/// operands in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Const(Rational),
    Var(VarId),
    Sym(Symbol),
    Fun(Func, Expr),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, i64),
    Div(Expr, Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub(crate) fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: Rational) -> Self {
        Expr::from_node(Node::Const(c))
    }

    pub fn int(i: i64) -> Self {
        Expr::constant(Rational::from_integer(BigInt::from(i)))
    }

    /// `num / den` as an exact constant. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator in rational constant");
        Expr::constant(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Self {
        Expr::constant(Rational::zero())
    }

    pub fn one() -> Self {
        Expr::constant(Rational::one())
    }

    pub fn var(v: VarId) -> Self {
        Expr::from_node(Node::Var(v))
    }

    pub fn x(i: usize) -> Self {
        Expr::var(VarId::Indep(i))
    }

    pub fn u(j: usize) -> Self {
        Expr::var(VarId::Dep(j))
    }

    pub fn sym(s: Symbol) -> Self {
        Expr::from_node(Node::Sym(s))
    }

    pub fn fun(f: Func, arg: Expr) -> Self {
        Expr::from_node(Node::Fun(f, arg))
    }

    pub fn exp(arg: Expr) -> Self {
        Expr::fun(Func::Exp, arg)
    }

    pub fn log(arg: Expr) -> Self {
        Expr::fun(Func::Log, arg)
    }

    pub fn sin(arg: Expr) -> Self {
        Expr::fun(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Self {
        Expr::fun(Func::Cos, arg)
    }

    pub fn sqrt(arg: Expr) -> Self {
        Expr::fun(Func::Sqrt, arg)
    }

    /// Sum of the operands, flattening nested sums. No folding.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for t in terms {
            match t.node() {
                Node::Sum(inner) => out.extend(inner.iter().cloned()),
                _ => out.push(t),
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Sum(out)),
        }
    }

    /// Product of the operands, flattening nested products. No folding.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for t in factors {
            match t.node() {
                Node::Product(inner) => out.extend(inner.iter().cloned()),
                _ => out.push(t),
            }
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Product(out)),
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        match k {
            1 => self.clone(),
            _ => Expr::from_node(Node::Power(self.clone(), k)),
        }
    }

    /// Quotient node. The literal zero constant is rejected as a denominator.
    pub fn checked_div(&self, den: &Expr) -> Result<Self, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::from_node(Node::Div(self.clone(), den.clone())))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_const().and_then(|c| c.to_f64())
    }

    /// Canonical form; see [`canon`].
    pub fn simplify(&self) -> Expr {
        canon::simplify(self)
    }

    /// Whether the canonical form is the zero constant.
    pub fn is_identically_zero(&self) -> bool {
        self.simplify().is_zero()
    }

    /// Structural equality of canonical forms.
    pub fn equivalent(&self, other: &Expr) -> bool {
        (self - other).is_identically_zero()
    }

    /// Coefficients as a polynomial in `v`, lowest power first; `None` when
    /// the expression is not polynomial in `v`.
    pub fn coefficients_in(&self, v: VarId) -> Option<Vec<Expr>> {
        canon::coefficients_in(self, v)
    }

    /// Whether the canonical form is a polynomial in variables and symbols.
    pub fn is_polynomial(&self) -> bool {
        canon::is_polynomial(self)
    }

    /// Calls `visit` on every node, parents before children.
    pub fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Sym(_) => {}
            Node::Fun(_, a) | Node::Power(a, _) => a.walk(visit),
            Node::Sum(ts) | Node::Product(ts) => ts.iter().for_each(|t| t.walk(visit)),
            Node::Div(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }

    /// Variables occurring in the expression, including those a symbol
    /// depends on.
    pub fn variables(&self) -> std::collections::BTreeSet<VarId> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| match e.node() {
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Sym(s) => out.extend(s.args.iter().copied()),
            _ => {}
        });
        out
    }

    /// Variables occurring literally, ignoring symbol argument lists.
    pub fn explicit_variables(&self) -> std::collections::BTreeSet<VarId> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Node::Var(v) = e.node() {
                out.insert(*v);
            }
        });
        out
    }

    pub fn symbols(&self) -> std::collections::BTreeSet<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Node::Sym(s) = e.node() {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.variables().contains(&v)
    }

    pub fn has_symbols(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e.node(), Node::Sym(_)));
        found
    }

    /// Display wrapper that writes `u^1` as `u` (single dependent variable).
    pub fn scalar_display(&self) -> ScalarDisplay<'_> {
        ScalarDisplay(self, true)
    }

    /// [`Expr::scalar_display`] when `scalar` holds, plain display otherwise.
    pub fn scalar_display_if(&self, scalar: bool) -> ScalarDisplay<'_> {
        ScalarDisplay(self, scalar)
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Sum(_) => 1,
            Node::Const(c) if c.is_negative() => 1,
            Node::Product(fs) if leading_negative(fs) => 1,
            Node::Product(_) | Node::Div(..) => 2,
            Node::Const(c) if !c.is_integer() => 2,
            Node::Power(..) => 3,
            _ => 4,
        }
    }

    pub(crate) fn fmt_styled(&self, f: &mut fmt::Formatter<'_>, scalar: bool) -> fmt::Result {
        match self.node() {
            Node::Const(c) => fmt_rational(f, c),
            Node::Var(v) => v.fmt_styled(f, scalar),
            Node::Sym(s) => s.fmt_styled(f, scalar),
            Node::Fun(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_styled(f, scalar)?;
                write!(f, ")")
            }
            Node::Sum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i == 0 {
                        t.fmt_styled(f, scalar)?;
                    } else if let Some(neg) = negated_term(t) {
                        write!(f, " - ")?;
                        fmt_operand(f, &neg, 2, scalar)?;
                    } else {
                        write!(f, " + ")?;
                        t.fmt_styled(f, scalar)?;
                    }
                }
                Ok(())
            }
            Node::Product(fs) => {
                let mut rest: &[Expr] = fs;
                if leading_negative(fs) {
                    write!(f, "-")?;
                    let c = fs[0].as_const().unwrap();
                    if (-c).is_one() {
                        rest = &fs[1..];
                    } else {
                        fmt_rational(f, &-c)?;
                        rest = &fs[1..];
                        if !rest.is_empty() {
                            write!(f, "*")?;
                        }
                    }
                }
                for (i, t) in rest.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    fmt_operand(f, t, 3, scalar)?;
                }
                Ok(())
            }
            Node::Power(base, k) => {
                fmt_operand(f, base, 4, scalar)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Node::Div(num, den) => {
                fmt_operand(f, num, 2, scalar)?;
                write!(f, "/")?;
                fmt_operand(f, den, 3, scalar)
            }
        }
    }
}

fn leading_negative(fs: &[Expr]) -> bool {
    fs.first()
        .and_then(|e| e.as_const())
        .is_some_and(|c| c.is_negative())
}

// For a summand printed after " - ": the term with its sign flipped.
fn negated_term(t: &Expr) -> Option<Expr> {
    match t.node() {
        Node::Const(c) if c.is_negative() => Some(Expr::constant(-c)),
        Node::Product(fs) if leading_negative(fs) => {
            let c = -fs[0].as_const().unwrap();
            let mut rest: Vec<Expr> = fs[1..].to_vec();
            if !c.is_one() {
                rest.insert(0, Expr::constant(c));
            }
            Some(Expr::product(rest))
        }
        _ => None,
    }
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8, scalar: bool) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "(")?;
        e.fmt_styled(f, scalar)?;
        write!(f, ")")
    } else {
        e.fmt_styled(f, scalar)
    }
}

fn fmt_rational(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_styled(f, false)
    }
}

pub struct ScalarDisplay<'a>(&'a Expr, bool);

impl fmt::Display for ScalarDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt_styled(f, self.1)
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Self {
        Expr::int(i)
    }
}

impl From<Rational> for Expr {
    fn from(c: Rational) -> Self {
        Expr::constant(c)
    }
}

impl From<VarId> for Expr {
    fn from(v: VarId) -> Self {
        Expr::var(v)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::sym(s)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
forward_binop!(Sub, sub, |a, b| Expr::sum([a.clone(), -b]));
forward_binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
// Panics on a literal zero denominator, like integer division.
forward_binop!(Div, div, |a, b| a
    .checked_div(b)
    .expect("division by the zero constant"));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            _ => Expr::product([Expr::int(-1), self.clone()]),
        }
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Self {
        Expr::sum(iter)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Self {
        Expr::product(iter)
    }
}
