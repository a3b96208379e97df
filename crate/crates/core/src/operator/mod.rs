//! Scalar and matrix differential operators `sum g_(k,h) D_(k,h)`.
//!
//! An operator acts as "coefficient times derivative": `P u` is the sum of
//! `g_(k,h)` times the `(k,h)` derivative of `u`. Coefficients of a
//! quasi-linear operator may depend on the dependent variables, but never on
//! their derivatives.

mod expand;
mod jetpoly;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, VarId};
use crate::jet::{DerivIndex, JetError};

pub use expand::{apply_to_jet, expand_product, expand_product_with_cap, matrix_expand_product, DEFAULT_ORDER_CAP};
pub use jetpoly::{canonicalize_jet, JetMonomial, JetPolynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("no expression supplied for dependent variable u{0}")]
    ArityMismatch(usize),
    #[error("expansion reaches order {order}, above the cap {cap}")]
    OrderOverflow { order: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("coefficient of D{index} depends on {var}, not allowed for a {linearity} operator")]
    IllegalDependence { index: DerivIndex, var: VarId, linearity: Linearity },
    #[error("index {index} is not valid for n = {n}")]
    IndexDimension { index: DerivIndex, n: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Linearity {
    /// Coefficients depend on the independent variables only.
    Linear,
    /// Coefficients may also depend on the dependent variables.
    QuasiLinear,
}

impl fmt::Display for Linearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linearity::Linear => "linear",
            Linearity::QuasiLinear => "quasi-linear",
        })
    }
}

/// `sum g_(k,h) D_(k,h)` over `n` independent and `m` dependent variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOperator {
    n: usize,
    m: usize,
    linearity: Linearity,
    coeffs: BTreeMap<DerivIndex, Expr>,
}

impl DiffOperator {
    pub fn new(n: usize, m: usize, linearity: Linearity) -> Self {
        assert!(n >= 1 && m >= 1, "operator dimensions must be positive");
        DiffOperator { n, m, linearity, coeffs: BTreeMap::new() }
    }

    /// The identity `D_(0,1)`.
    pub fn identity(n: usize, m: usize) -> Self {
        DiffOperator::new(n, m, Linearity::Linear)
            .with(DerivIndex::identity(n), Expr::one())
            .expect("identity is valid")
    }

    /// Build from `(k, h, coefficient)` triples.
    pub fn from_terms(
        n: usize,
        m: usize,
        linearity: Linearity,
        terms: impl IntoIterator<Item = (usize, usize, Expr)>,
    ) -> Result<Self, OperatorError> {
        let mut op = DiffOperator::new(n, m, linearity);
        for (k, h, c) in terms {
            let d = if k == 0 && h == 1 { DerivIndex::identity(n) } else { DerivIndex::new(n, k, h)? };
            op.add(d, c)?;
        }
        Ok(op)
    }

    pub fn with(mut self, d: DerivIndex, coeff: Expr) -> Result<Self, OperatorError> {
        self.set(d, coeff)?;
        Ok(self)
    }

    /// Set the coefficient of `D_d`, replacing any previous value.
    pub fn set(&mut self, d: DerivIndex, coeff: Expr) -> Result<(), OperatorError> {
        let d = self.check_index(d)?;
        let c = coeff.simplify();
        self.check_coeff(d, &c)?;
        if c.is_zero() {
            self.coeffs.remove(&d);
        } else {
            self.coeffs.insert(d, c);
        }
        Ok(())
    }

    /// Add to the coefficient of `D_d`.
    pub fn add(&mut self, d: DerivIndex, coeff: Expr) -> Result<(), OperatorError> {
        let d = self.check_index(d)?;
        let sum = self.coeff(d) + coeff;
        self.set(d, sum)
    }

    fn check_index(&self, d: DerivIndex) -> Result<DerivIndex, OperatorError> {
        if d.is_identity() {
            return Ok(DerivIndex::identity(self.n));
        }
        if d.n() != self.n {
            return Err(OperatorError::IndexDimension { index: d, n: self.n });
        }
        Ok(d)
    }

    fn check_coeff(&self, d: DerivIndex, c: &Expr) -> Result<(), OperatorError> {
        for v in c.variables() {
            let illegal = match v {
                VarId::Jet(..) => true,
                VarId::Dep(j) => self.linearity == Linearity::Linear || j > self.m,
                VarId::Indep(i) => i > self.n,
            };
            if illegal {
                return Err(OperatorError::IllegalDependence { index: d, var: v, linearity: self.linearity });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn linearity(&self) -> Linearity {
        self.linearity
    }

    /// Coefficient of `D_d`, zero if absent.
    pub fn coeff(&self, d: DerivIndex) -> Expr {
        let d = if d.is_identity() { DerivIndex::identity(self.n) } else { d };
        self.coeffs.get(&d).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient by `(k, h)`; zero for indices that do not exist.
    pub fn g(&self, k: usize, h: usize) -> Expr {
        match DerivIndex::new(self.n, k, h) {
            Ok(d) => self.coeff(d),
            Err(_) => Expr::zero(),
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&DerivIndex, &Expr)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest derivative order with a non-zero coefficient (0 if none).
    pub fn order(&self) -> usize {
        self.coeffs.keys().map(|d| d.order()).max().unwrap_or(0)
    }

    /// Whether any coefficient depends on a dependent variable.
    pub fn references_dependent(&self) -> bool {
        self.coeffs.values().any(|c| c.variables().iter().any(VarId::is_dependent))
    }

    /// Same coefficients under another linearity flag.
    pub fn relabel(&self, linearity: Linearity) -> Result<Self, OperatorError> {
        let mut op = DiffOperator::new(self.n, self.m, linearity);
        for (d, c) in &self.coeffs {
            op.set(*d, c.clone())?;
        }
        Ok(op)
    }

    /// Map every coefficient.
    pub fn map_coeffs(&self, f: &dyn Fn(&Expr) -> Expr) -> Result<Self, OperatorError> {
        let mut op = DiffOperator::new(self.n, self.m, self.linearity);
        for (d, c) in &self.coeffs {
            op.set(*d, f(c))?;
        }
        Ok(op)
    }

    /// `P u^target` as a jet polynomial, Schwarz-equal slots merged.
    pub fn jet_polynomial(&self, target: usize) -> JetPolynomial {
        let mut p = JetPolynomial::zero(self.n, self.m);
        for (d, c) in &self.coeffs {
            p.add_term(c.clone(), &[(VarId::jet(target, *d), 1)]);
        }
        p
    }

    /// Apply to concrete functions of `x`: `u_exprs[j-1]` stands for `u^j`.
    /// Dependent variables in coefficients are replaced by `u_exprs`, then
    /// each coefficient multiplies the matching derivative of the target.
    pub fn apply(&self, target: usize, u_exprs: &[Expr]) -> Result<Expr, OperatorError> {
        let base = u_exprs.get(target.wrapping_sub(1)).ok_or(OperatorError::ArityMismatch(target))?;
        self.apply_to(base, u_exprs)
    }

    /// Apply to `arg`, with coefficients evaluated at `u_exprs`. This is how
    /// an outer factor of a product acts: its coefficients see the original
    /// `u`, its derivatives act on the inner result.
    pub fn apply_to(&self, arg: &Expr, u_exprs: &[Expr]) -> Result<Expr, OperatorError> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (d, c) in &self.coeffs {
            let c = c.subst_vars(&|v| match v {
                VarId::Dep(j) => u_exprs.get(j.wrapping_sub(1)).cloned(),
                _ => None,
            });
            if let Some(j) = c.variables().into_iter().find_map(|v| match v {
                VarId::Dep(j) => Some(j),
                _ => None,
            }) {
                return Err(OperatorError::ArityMismatch(j));
            }
            let deriv = d.axes().into_iter().fold(arg.clone(), |acc, a| acc.diff(VarId::x(a)));
            terms.push(c * deriv);
        }
        Ok(Expr::sum(terms).simplify())
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        // Highest order first.
        for (i, (d, c)) in self.coeffs.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "D{d}")?;
            } else {
                write!(f, "({})*D{d}", c.scalar_display_if(self.m == 1))?;
            }
        }
        Ok(())
    }
}

/// `m x m` grid of operators; entry `(p, q)` acts on `u^q` in row `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixOperator {
    n: usize,
    m: usize,
    entries: Vec<Vec<DiffOperator>>,
}

impl MatrixOperator {
    pub fn new(entries: Vec<Vec<DiffOperator>>) -> Result<Self, OperatorError> {
        let m = entries.len();
        if m == 0 {
            return Err(OperatorError::ShapeMismatch("empty matrix".into()));
        }
        let n = entries[0][0].n;
        for row in &entries {
            if row.len() != m {
                return Err(OperatorError::ShapeMismatch(format!("row of length {} in a {m}x{m} grid", row.len())));
            }
            for e in row {
                if e.n != n || e.m != m {
                    return Err(OperatorError::ShapeMismatch(format!(
                        "entry with (n, m) = ({}, {}) in a grid for ({n}, {m})",
                        e.n, e.m
                    )));
                }
            }
        }
        Ok(MatrixOperator { n, m, entries })
    }

    /// All-zero grid.
    pub fn zero(n: usize, m: usize, linearity: Linearity) -> Self {
        let entries = (0..m).map(|_| (0..m).map(|_| DiffOperator::new(n, m, linearity)).collect()).collect();
        MatrixOperator { n, m, entries }
    }

    /// Identity operator on the diagonal.
    pub fn identity(n: usize, m: usize) -> Self {
        Self::diagonal((0..m).map(|_| DiffOperator::identity(n, m)).collect()).expect("identity is square")
    }

    pub fn diagonal(ops: Vec<DiffOperator>) -> Result<Self, OperatorError> {
        let m = ops.len();
        let Some(first) = ops.first() else {
            return Err(OperatorError::ShapeMismatch("empty matrix".into()));
        };
        let (n, lin) = (first.n, first.linearity);
        let mut entries: Vec<Vec<DiffOperator>> =
            (0..m).map(|_| (0..m).map(|_| DiffOperator::new(n, m, lin)).collect()).collect();
        for (p, op) in ops.into_iter().enumerate() {
            entries[p][p] = op;
        }
        MatrixOperator::new(entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Entry `(p, q)`, 1-based.
    pub fn entry(&self, p: usize, q: usize) -> &DiffOperator {
        &self.entries[p - 1][q - 1]
    }

    pub fn entry_mut(&mut self, p: usize, q: usize) -> &mut DiffOperator {
        &mut self.entries[p - 1][q - 1]
    }

    pub fn rows(&self) -> &[Vec<DiffOperator>] {
        &self.entries
    }

    /// Orders `s_(p,q)` of the entries.
    pub fn order_profile(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|row| row.iter().map(DiffOperator::order).collect()).collect()
    }

    /// Diagonal entries of order at most `s`, off-diagonal at most `s - 1`.
    pub fn fits_profile(&self, s: usize) -> bool {
        self.order_profile().iter().enumerate().all(|(p, row)| {
            row.iter().enumerate().all(|(q, &o)| if p == q { o <= s } else { o + 1 <= s })
        })
    }

    /// Shape of a first-order factor: diagonal order 1, off-diagonal order 0.
    pub fn is_factor_shaped(&self) -> bool {
        self.fits_profile(1)
    }

    /// `M u` per row as jet polynomials.
    pub fn jet_polynomials(&self) -> Vec<Vec<JetPolynomial>> {
        self.entries
            .iter()
            .map(|row| row.iter().enumerate().map(|(q, op)| op.jet_polynomial(q + 1)).collect())
            .collect()
    }

    /// Apply to concrete functions; returns one expression per row.
    pub fn apply(&self, u_exprs: &[Expr]) -> Result<Vec<Expr>, OperatorError> {
        self.entries
            .iter()
            .map(|row| {
                let parts: Result<Vec<Expr>, _> =
                    row.iter().enumerate().map(|(q, op)| op.apply(q + 1, u_exprs)).collect();
                Ok(Expr::sum(parts?).simplify())
            })
            .collect()
    }
}

impl fmt::Display for MatrixOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, row) in self.entries.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            if p > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Recover an operator from a jet polynomial whose terms are all single
/// derivatives of `u^target` to the first power.
pub fn to_operator(p: &JetPolynomial, target: usize, linearity: Linearity) -> Result<DiffOperator, OperatorError> {
    let mut op = DiffOperator::new(p.n(), p.m(), linearity);
    for (mono, c) in p.terms() {
        match mono.factors() {
            [(VarId::Dep(j), 1)] if *j == target => op.add(DerivIndex::identity(p.n()), c.clone())?,
            [(VarId::Jet(j, d), 1)] if *j == target => op.add(*d, c.clone())?,
            _ => {
                return Err(OperatorError::ShapeMismatch(format!(
                    "term {} is not a single derivative of u{target}",
                    mono
                )))
            }
        }
    }
    Ok(op)
}
