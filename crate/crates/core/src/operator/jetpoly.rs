//! Polynomials in jet coordinates with symbolic coefficients.
//!
//! Canonical form: every coefficient is a simplified, non-zero expression in
//! `x` and `u` (no jets of order one or more), and every monomial is a
//! product of jets of order at least one on their smallest Schwarz-equal
//! slots. A dependent variable `u^q` sits in a monomial only when it is the
//! whole monomial, to the first power: the undifferentiated slot of an
//! operator. Next to jets it is moved into the coefficient, so `u * u_x`
//! reads as coefficient `u` on monomial `u_x`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{Expr, Node, VarId};
use crate::jet::{DerivIndex, JetError};

use super::OperatorError;

/// Product of jet variables with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JetMonomial(Vec<(VarId, u32)>);

impl JetMonomial {
    /// Canonical monomial of the given factors. Dependent variables are
    /// dropped unless they form the whole monomial; see the module docs.
    pub fn new(factors: &[(VarId, u32)]) -> Self {
        split(factors).1
    }

    pub fn one() -> Self {
        JetMonomial(Vec::new())
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of factors counted with multiplicity; the bare slot `u^q`
    /// counts as one.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    /// Sum of derivative orders with multiplicity.
    pub fn weight(&self) -> usize {
        self.0.iter().map(|(v, e)| order_of(v) * *e as usize).sum()
    }

    /// Highest derivative order among the factors.
    pub fn max_order(&self) -> usize {
        self.0.iter().map(|(v, _)| order_of(v)).max().unwrap_or(0)
    }

    /// Count of factors that are jets of order at least one.
    pub fn jet_degree(&self) -> u32 {
        self.0.iter().filter(|(v, _)| v.is_jet()).map(|(_, e)| e).sum()
    }

    pub fn to_expr(&self) -> Expr {
        Expr::product(self.0.iter().map(|(v, e)| Expr::var(*v).pow(i64::from(*e))))
    }

    fn fmt_styled(&self, f: &mut fmt::Formatter<'_>, scalar: bool) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            v.fmt_styled(f, scalar)?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for JetMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_styled(f, false)
    }
}

fn order_of(v: &VarId) -> usize {
    match v {
        VarId::Jet(_, d) => d.order(),
        _ => 0,
    }
}

// Highest weight first, then highest degree, then by factors.
impl Ord for JetMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight()
            .cmp(&self.weight())
            .then_with(|| other.degree().cmp(&self.degree()))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for JetMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Split raw factors into the part moved to the coefficient and the
// canonical monomial.
fn split(factors: &[(VarId, u32)]) -> (Vec<(VarId, u32)>, JetMonomial) {
    let mut jets: BTreeMap<VarId, u32> = BTreeMap::new();
    let mut plain: BTreeMap<VarId, u32> = BTreeMap::new();
    for &(v, e) in factors {
        if e == 0 {
            continue;
        }
        match v {
            VarId::Jet(j, d) => *jets.entry(VarId::jet(j, d.canonical())).or_default() += e,
            other => *plain.entry(other).or_default() += e,
        }
    }
    let slot = jets.is_empty()
        && plain.len() == 1
        && plain.iter().all(|(v, e)| v.is_dependent() && *e == 1);
    if slot {
        return (Vec::new(), JetMonomial(plain.into_iter().collect()));
    }
    (plain.into_iter().collect(), JetMonomial(jets.into_iter().collect()))
}

/// Sum of coefficient times jet monomial, kept in canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetPolynomial {
    n: usize,
    m: usize,
    terms: BTreeMap<JetMonomial, Expr>,
}

impl JetPolynomial {
    pub fn zero(n: usize, m: usize) -> Self {
        JetPolynomial { n, m, terms: BTreeMap::new() }
    }

    /// The bare dependent variable `u^q`.
    pub fn slot(n: usize, m: usize, q: usize) -> Self {
        let mut p = JetPolynomial::zero(n, m);
        p.add_term(Expr::one(), &[(VarId::Dep(q), 1)]);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Add `coeff * prod factors`. The coefficient must not contain jets
    /// of order one or more.
    pub fn add_term(&mut self, coeff: Expr, factors: &[(VarId, u32)]) {
        debug_assert!(
            !coeff.variables().iter().any(VarId::is_jet),
            "jet variable inside a coefficient: {coeff}"
        );
        let (moved, mono) = split(factors);
        let c = if moved.is_empty() {
            coeff
        } else {
            Expr::product(
                std::iter::once(coeff).chain(moved.into_iter().map(|(v, e)| Expr::var(v).pow(i64::from(e)))),
            )
        };
        self.add_canonical(mono, c);
    }

    fn add_canonical(&mut self, mono: JetMonomial, c: Expr) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                let c = c.simplify();
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let c = (o.get() + &c).simplify();
                if c.is_zero() {
                    o.remove();
                } else {
                    o.insert(c);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&JetMonomial, &Expr)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial given by raw factors, zero if absent.
    pub fn coefficient(&self, factors: &[(VarId, u32)]) -> Expr {
        self.coefficient_of(&JetMonomial::new(factors))
    }

    pub fn coefficient_of(&self, mono: &JetMonomial) -> Expr {
        self.terms.get(mono).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn add(&self, other: &JetPolynomial) -> JetPolynomial {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_canonical(mono.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &JetPolynomial) -> JetPolynomial {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_canonical(mono.clone(), -c);
        }
        out
    }

    /// Multiply every coefficient by a jet-free expression.
    pub fn scale(&self, k: &Expr) -> JetPolynomial {
        let mut out = JetPolynomial::zero(self.n, self.m);
        for (mono, c) in &self.terms {
            out.add_canonical(mono.clone(), k * c);
        }
        out
    }

    /// Map every coefficient.
    pub fn map_coeffs(&self, f: &dyn Fn(&Expr) -> Expr) -> JetPolynomial {
        let mut out = JetPolynomial::zero(self.n, self.m);
        for (mono, c) in &self.terms {
            out.add_canonical(mono.clone(), f(c));
        }
        out
    }

    /// Total derivative along `x^axis`. Coefficients are differentiated by
    /// the chain rule through `u`; jets move up one order.
    pub fn total_derivative(&self, axis: usize) -> Result<JetPolynomial, JetError> {
        if axis == 0 || axis > self.n {
            return Err(JetError::InvalidAxis { n: self.n, axis });
        }
        let first = DerivIndex::first(self.n, axis)?;
        let mut out = JetPolynomial::zero(self.n, self.m);
        for (mono, c) in &self.terms {
            let base = mono.factors();
            out.add_term(c.diff(VarId::x(axis)), base);
            for j in 1..=self.m {
                let dc = c.diff(VarId::u(j));
                if !dc.is_zero() {
                    let mut fs = base.to_vec();
                    fs.push((VarId::Jet(j, first), 1));
                    out.add_term(dc, &fs);
                }
            }
            for (i, &(v, e)) in base.iter().enumerate() {
                let dv = match v {
                    VarId::Dep(j) => VarId::Jet(j, first),
                    VarId::Jet(j, d) => VarId::Jet(j, d.compose(axis)?),
                    VarId::Indep(_) => unreachable!("independent variable in a monomial"),
                };
                let mut fs = base.to_vec();
                fs[i].1 -= 1;
                fs.push((dv, 1));
                out.add_term(c * Expr::int(i64::from(e)), &fs);
            }
        }
        Ok(out)
    }

    /// Total derivatives along `axes`, first axis innermost.
    pub fn derivative_along(&self, axes: &[usize]) -> Result<JetPolynomial, JetError> {
        let mut p = self.clone();
        for &a in axes {
            p = p.total_derivative(a)?;
        }
        Ok(p)
    }

    /// Highest derivative order occurring in a monomial.
    pub fn max_order(&self) -> usize {
        self.terms.keys().map(JetMonomial::max_order).max().unwrap_or(0)
    }

    /// Highest monomial degree; the bare slot counts as one.
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(JetMonomial::degree).max().unwrap_or(0)
    }

    /// Highest count of jets of order at least one in a monomial.
    pub fn max_jet_degree(&self) -> u32 {
        self.terms.keys().map(JetMonomial::jet_degree).max().unwrap_or(0)
    }

    /// The polynomial as a plain expression in jet variables.
    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().map(|(m, c)| c * m.to_expr())).simplify()
    }

    /// Evaluate at concrete functions of `x`: `u^j` becomes `u_exprs[j-1]`
    /// and each jet the matching partial derivative.
    pub fn instantiate(&self, u_exprs: &[Expr]) -> Result<Expr, OperatorError> {
        let u_of = |j: usize| u_exprs.get(j.wrapping_sub(1)).cloned().ok_or(OperatorError::ArityMismatch(j));
        let mut out = Vec::with_capacity(self.terms.len());
        for (mono, c) in &self.terms {
            let mut factors = Vec::with_capacity(mono.0.len() + 1);
            for (v, e) in &mono.0 {
                let val = match v {
                    VarId::Dep(j) => u_of(*j)?,
                    VarId::Jet(j, d) => d.axes().into_iter().fold(u_of(*j)?, |acc, a| acc.diff(VarId::x(a))),
                    VarId::Indep(i) => Expr::x(*i),
                };
                factors.push(val.pow(i64::from(*e)));
            }
            let mut missing = None;
            let coeff = c.subst_vars(&|v| match v {
                VarId::Dep(j) => u_exprs.get(j.wrapping_sub(1)).cloned(),
                _ => None,
            });
            for v in coeff.variables() {
                if let VarId::Dep(j) = v {
                    missing.get_or_insert(j);
                }
            }
            if let Some(j) = missing {
                return Err(OperatorError::ArityMismatch(j));
            }
            factors.push(coeff);
            out.push(Expr::product(factors));
        }
        Ok(Expr::sum(out).simplify())
    }
}

fn negative(c: &Expr) -> Option<Expr> {
    let is_neg = match c.node() {
        Node::Const(r) => r < &num_traits::Zero::zero(),
        Node::Product(fs) => fs[0].as_const().is_some_and(|r| r < &num_traits::Zero::zero()),
        _ => false,
    };
    is_neg.then(|| (-c).simplify())
}

impl fmt::Display for JetPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let scalar = self.m == 1;
        for (i, (mono, c)) in self.terms.iter().enumerate() {
            let (neg, mag) = match negative(c) {
                Some(a) => (true, a),
                None => (false, c.clone()),
            };
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if mono.is_one() {
                write!(f, "{}", mag.scalar_display_if(scalar))?;
                continue;
            }
            if !mag.is_one() {
                match mag.node() {
                    Node::Sum(_) | Node::Div(..) => write!(f, "({})*", mag.scalar_display_if(scalar))?,
                    _ => write!(f, "{}*", mag.scalar_display_if(scalar))?,
                }
            }
            mono.fmt_styled(f, scalar)?;
        }
        Ok(())
    }
}

/// Collect raw `(coefficient, factors)` terms into canonical form:
/// Schwarz-equal slots merged onto the smallest slot, like monomials
/// combined, zero terms dropped.
pub fn canonicalize_jet(
    n: usize,
    m: usize,
    raw: impl IntoIterator<Item = (Expr, Vec<(VarId, u32)>)>,
) -> JetPolynomial {
    let mut p = JetPolynomial::zero(n, m);
    for (c, fs) in raw {
        p.add_term(c, &fs);
    }
    p
}
