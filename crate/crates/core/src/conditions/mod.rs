//! Factorization condition systems for second-order operators split into two
//! first-order factors, and candidate checking by re-expansion.
//!
//! A [`ConditionSystem`] is generated, not transcribed: the factors are
//! filled with opaque coefficient symbols (`b[i,k,h]` for scalar operators,
//! `a[i,p,q,k,h]` for matrices), the product is expanded on jet space, and
//! each coefficient of the expansion is matched against the operator's own
//! coefficient symbols (`g[k,h]`, `f[p,q,k,h]`). Terms of the expansion that
//! no operator coefficient can match become conditions with left side 0.

mod check;
mod taylor;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, Symbol, SymbolResolver, VarId};
use crate::jet::{DerivIndex, JetError};
use crate::operator::{
    expand_product, matrix_expand_product, to_operator, DiffOperator, JetPolynomial, Linearity, MatrixOperator,
    OperatorError,
};

pub use check::{check_candidate, CheckOptions, CheckReport, ConditionResidual, NumericCheck, TermResidual, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionsError {
    #[error("unsupported template: {0}")]
    UnsupportedTemplate(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

impl From<JetError> for ConditionsError {
    fn from(e: JetError) -> Self {
        ConditionsError::Operator(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Scalar,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    /// One independent variable.
    Ode,
    /// Two independent variables.
    Pde2,
}

/// One of the eight second-order factorization settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Template {
    pub linearity: Linearity,
    pub shape: Shape,
    pub domain: Domain,
}

impl Template {
    pub const fn new(linearity: Linearity, shape: Shape, domain: Domain) -> Self {
        Template { linearity, shape, domain }
    }

    pub const ALL: [Template; 8] = [
        Template::new(Linearity::Linear, Shape::Scalar, Domain::Ode),
        Template::new(Linearity::Linear, Shape::Scalar, Domain::Pde2),
        Template::new(Linearity::QuasiLinear, Shape::Scalar, Domain::Ode),
        Template::new(Linearity::QuasiLinear, Shape::Scalar, Domain::Pde2),
        Template::new(Linearity::Linear, Shape::Matrix, Domain::Ode),
        Template::new(Linearity::Linear, Shape::Matrix, Domain::Pde2),
        Template::new(Linearity::QuasiLinear, Shape::Matrix, Domain::Ode),
        Template::new(Linearity::QuasiLinear, Shape::Matrix, Domain::Pde2),
    ];

    /// Number of independent variables.
    pub fn n(&self) -> usize {
        match self.domain {
            Domain::Ode => 1,
            Domain::Pde2 => 2,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.linearity == Linearity::Linear
    }

    /// Problem-file kind, e.g. `nonlinear-pde2-system`.
    pub fn name(&self) -> String {
        let lin = if self.is_linear() { "linear" } else { "nonlinear" };
        let dom = match self.domain {
            Domain::Ode => "ode",
            Domain::Pde2 => "pde2",
        };
        match self.shape {
            Shape::Scalar => format!("{lin}-{dom}"),
            Shape::Matrix => format!("{lin}-{dom}-system"),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Template::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Template matching a setting, if there is one.
    pub fn classify(linearity: Linearity, matrix: bool, n: usize) -> Option<Self> {
        let domain = match n {
            1 => Domain::Ode,
            2 => Domain::Pde2,
            _ => return None,
        };
        let shape = if matrix { Shape::Matrix } else { Shape::Scalar };
        Some(Template::new(linearity, shape, domain))
    }

    /// Arguments of every coefficient function: `x` and, for quasi-linear
    /// templates, all dependent variables.
    pub fn args(&self, m: usize) -> Vec<VarId> {
        let mut args: Vec<VarId> = (1..=self.n()).map(VarId::x).collect();
        if !self.is_linear() {
            args.extend((1..=m).map(VarId::u));
        }
        args
    }

    fn check_m(&self, m: usize) -> Result<(), ConditionsError> {
        match self.shape {
            Shape::Scalar if m != 1 => {
                Err(ConditionsError::UnsupportedTemplate(format!("{} needs m = 1, got {m}", self.name())))
            }
            Shape::Matrix if m == 0 => Err(ConditionsError::UnsupportedTemplate("m = 0".into())),
            _ => Ok(()),
        }
    }

    /// Symbol `g[k,h]` or `f[p,q,k,h]` for operator coefficients.
    pub fn operator_symbol(&self, m: usize, p: usize, q: usize, k: usize, h: usize) -> Symbol {
        match self.shape {
            Shape::Scalar => Symbol::new("g", vec![k, h], self.args(m)),
            Shape::Matrix => Symbol::new("f", vec![p, q, k, h], self.args(m)),
        }
    }

    /// Symbol `b[i,k,h]` or `a[i,p,q,k,h]` for factor coefficients.
    pub fn factor_symbol(&self, m: usize, i: usize, p: usize, q: usize, k: usize, h: usize) -> Symbol {
        match self.shape {
            Shape::Scalar => Symbol::new("b", vec![i, k, h], self.args(m)),
            Shape::Matrix => Symbol::new("a", vec![i, p, q, k, h], self.args(m)),
        }
    }

    /// Resolver accepting this template's symbols in expression text.
    pub fn resolver(&self, m: usize) -> TemplateSymbols {
        TemplateSymbols { template: *self, m }
    }

    /// Factors with one symbol per admissible coefficient.
    pub fn symbolic_candidate(&self, m: usize) -> Result<FactorizationCandidate, ConditionsError> {
        self.check_m(m)?;
        let n = self.n();
        let factor_entry = |i: usize, p: usize, q: usize| -> Result<DiffOperator, ConditionsError> {
            let mut op = DiffOperator::new(n, m, self.linearity);
            op.set(DerivIndex::identity(n), Expr::sym(self.factor_symbol(m, i, p, q, 0, 1)))?;
            if p == q {
                for h in 1..=n {
                    op.set(DerivIndex::new(n, 1, h)?, Expr::sym(self.factor_symbol(m, i, p, q, 1, h)))?;
                }
            }
            Ok(op)
        };
        match self.shape {
            Shape::Scalar => Ok(FactorizationCandidate::Scalar(vec![factor_entry(1, 1, 1)?, factor_entry(2, 1, 1)?])),
            Shape::Matrix => {
                let mut factors = Vec::new();
                for i in 1..=2 {
                    let entries = (1..=m)
                        .map(|p| (1..=m).map(|q| factor_entry(i, p, q)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    factors.push(MatrixOperator::new(entries)?);
                }
                Ok(FactorizationCandidate::Matrix(factors))
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Resolves `g`, `b` (scalar) or `f`, `a` (matrix) symbols of a template.
#[derive(Debug, Clone, Copy)]
pub struct TemplateSymbols {
    template: Template,
    m: usize,
}

impl SymbolResolver for TemplateSymbols {
    fn resolve(&self, name: &str, indices: &[usize]) -> Option<Vec<VarId>> {
        let arity = match (self.template.shape, name) {
            (Shape::Scalar, "g") => 2,
            (Shape::Scalar, "b") => 3,
            (Shape::Matrix, "f") => 4,
            (Shape::Matrix, "a") => 5,
            _ => return None,
        };
        (indices.len() == arity).then(|| self.template.args(self.m))
    }
}

/// A scalar or matrix operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operator {
    Scalar(DiffOperator),
    Matrix(MatrixOperator),
}

impl Operator {
    pub fn n(&self) -> usize {
        match self {
            Operator::Scalar(op) => op.n(),
            Operator::Matrix(op) => op.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Operator::Scalar(op) => op.m(),
            Operator::Matrix(op) => op.m(),
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Operator::Matrix(_))
    }

    pub fn linearity(&self) -> Linearity {
        let quasi = match self {
            Operator::Scalar(op) => op.linearity() == Linearity::QuasiLinear,
            Operator::Matrix(op) => op.rows().iter().flatten().any(|e| e.linearity() == Linearity::QuasiLinear),
        };
        if quasi {
            Linearity::QuasiLinear
        } else {
            Linearity::Linear
        }
    }

    /// Coefficient `g[k,h]` (scalar, `p = q = 1`) or `f[p,q,k,h]`.
    pub fn coefficient(&self, p: usize, q: usize, k: usize, h: usize) -> Expr {
        match self {
            Operator::Scalar(op) if p == 1 && q == 1 => op.g(k, h),
            Operator::Scalar(_) => Expr::zero(),
            Operator::Matrix(op) if p >= 1 && q >= 1 && p <= op.m() && q <= op.m() => op.entry(p, q).g(k, h),
            Operator::Matrix(_) => Expr::zero(),
        }
    }

    /// Canonical jet polynomials, one per entry (a 1x1 grid for scalars).
    pub fn jet_grid(&self) -> Vec<Vec<JetPolynomial>> {
        match self {
            Operator::Scalar(op) => vec![vec![op.jet_polynomial(1)]],
            Operator::Matrix(op) => op.jet_polynomials(),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Scalar(op) => write!(f, "{op}"),
            Operator::Matrix(op) => write!(f, "{op}"),
        }
    }
}

impl From<DiffOperator> for Operator {
    fn from(op: DiffOperator) -> Self {
        Operator::Scalar(op)
    }
}

impl From<MatrixOperator> for Operator {
    fn from(op: MatrixOperator) -> Self {
        Operator::Matrix(op)
    }
}

/// Ordered factors, leftmost first: `P = factors[0] factors[1] ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorizationCandidate {
    Scalar(Vec<DiffOperator>),
    Matrix(Vec<MatrixOperator>),
}

impl FactorizationCandidate {
    pub fn len(&self) -> usize {
        match self {
            FactorizationCandidate::Scalar(fs) => fs.len(),
            FactorizationCandidate::Matrix(fs) => fs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, FactorizationCandidate::Matrix(_))
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            FactorizationCandidate::Scalar(fs) => fs.first().map(DiffOperator::n),
            FactorizationCandidate::Matrix(fs) => fs.first().map(MatrixOperator::n),
        }
    }

    pub fn m(&self) -> Option<usize> {
        match self {
            FactorizationCandidate::Scalar(fs) => fs.first().map(DiffOperator::m),
            FactorizationCandidate::Matrix(fs) => fs.first().map(MatrixOperator::m),
        }
    }

    /// Quasi-linear if any factor is.
    pub fn linearity(&self) -> Linearity {
        let quasi = match self {
            FactorizationCandidate::Scalar(fs) => fs.iter().any(|f| f.linearity() == Linearity::QuasiLinear),
            FactorizationCandidate::Matrix(fs) => fs
                .iter()
                .flat_map(|f| f.rows().iter().flatten())
                .any(|e| e.linearity() == Linearity::QuasiLinear),
        };
        if quasi {
            Linearity::QuasiLinear
        } else {
            Linearity::Linear
        }
    }

    /// Whether this is a pair of first-order factors of template shape.
    pub fn is_first_order_pair(&self) -> bool {
        match self {
            FactorizationCandidate::Scalar(fs) => fs.len() == 2 && fs.iter().all(|f| f.order() <= 1),
            FactorizationCandidate::Matrix(fs) => fs.len() == 2 && fs.iter().all(MatrixOperator::is_factor_shaped),
        }
    }

    /// Factor coefficient `b[i,k,h]` (scalar) or `a[i,p,q,k,h]`.
    pub fn coefficient(&self, i: usize, p: usize, q: usize, k: usize, h: usize) -> Expr {
        match self {
            FactorizationCandidate::Scalar(fs) => match fs.get(i.wrapping_sub(1)) {
                Some(f) if p == 1 && q == 1 => f.g(k, h),
                _ => Expr::zero(),
            },
            FactorizationCandidate::Matrix(fs) => match fs.get(i.wrapping_sub(1)) {
                Some(f) if p >= 1 && q >= 1 && p <= f.m() && q <= f.m() => f.entry(p, q).g(k, h),
                _ => Expr::zero(),
            },
        }
    }

    /// Expanded product as canonical jet polynomials per entry.
    pub fn expand(&self) -> Result<Vec<Vec<JetPolynomial>>, ConditionsError> {
        if self.is_empty() {
            return Err(ConditionsError::ShapeMismatch("candidate without factors".into()));
        }
        match self {
            FactorizationCandidate::Scalar(fs) => Ok(vec![vec![expand_product(fs)?]]),
            FactorizationCandidate::Matrix(fs) => Ok(matrix_expand_product(fs)?),
        }
    }

    /// The operator this candidate multiplies out to. Fails when the
    /// expansion has terms no operator coefficient can carry.
    pub fn product(&self) -> Result<Operator, ConditionsError> {
        let grid = self.expand()?;
        let lin = self.linearity();
        match self {
            FactorizationCandidate::Scalar(_) => Ok(Operator::Scalar(to_operator(&grid[0][0], 1, lin)?)),
            FactorizationCandidate::Matrix(_) => {
                let entries = grid
                    .iter()
                    .map(|row| row.iter().enumerate().map(|(q, e)| to_operator(e, q + 1, lin)).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()?;
                Ok(Operator::Matrix(MatrixOperator::new(entries)?))
            }
        }
    }
}

impl fmt::Display for FactorizationCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorizationCandidate::Scalar(fs) => {
                let parts: Vec<String> = fs.iter().map(|q| format!("({q})")).collect();
                f.write_str(&parts.join(" "))
            }
            FactorizationCandidate::Matrix(fs) => {
                for (i, q) in fs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    writeln!(f, "N{}:", i + 1)?;
                    write!(f, "{q}")?;
                }
                Ok(())
            }
        }
    }
}

/// One identification `lhs = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    /// Matrix entry `(p, q)`; `(1, 1)` for scalar templates.
    pub entry: (usize, usize),
    /// `(k, h)` of the matched coefficient, smallest slot of its Schwarz
    /// class; `None` for conditions with left side 0.
    pub slot: Option<(usize, usize)>,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Condition {
    pub fn is_zero_condition(&self) -> bool {
        self.slot.is_none()
    }

    /// `lhs - rhs` after substituting operator and factor coefficients.
    pub fn residual(&self, op: &Operator, cand: &FactorizationCandidate) -> Expr {
        let lhs = substitute(&self.lhs, op, cand);
        let rhs = substitute(&self.rhs, op, cand);
        (lhs - rhs).simplify()
    }
}

fn substitute(e: &Expr, op: &Operator, cand: &FactorizationCandidate) -> Expr {
    e.subst_symbols(&|s: &Symbol| {
        let ix = s.indices();
        match (s.name(), ix) {
            ("g", &[k, h]) => Some(op.coefficient(1, 1, k, h)),
            ("f", &[p, q, k, h]) => Some(op.coefficient(p, q, k, h)),
            ("b", &[i, k, h]) => Some(cand.coefficient(i, 1, 1, k, h)),
            ("a", &[i, p, q, k, h]) => Some(cand.coefficient(i, p, q, k, h)),
            _ => None,
        }
    })
    .simplify()
}

/// The generated conditions of one template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionSystem {
    template: Template,
    m: usize,
    equations: Vec<Condition>,
}

impl ConditionSystem {
    pub fn template(&self) -> Template {
        self.template
    }

    pub fn n(&self) -> usize {
        self.template.n()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn equations(&self) -> &[Condition] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Operator coefficient symbols, each on exactly one left side.
    pub fn lhs_symbols(&self) -> BTreeSet<Symbol> {
        self.equations.iter().flat_map(|c| c.lhs.symbols()).collect()
    }

    /// Factor coefficient symbols and their partials.
    pub fn rhs_symbols(&self) -> BTreeSet<Symbol> {
        self.equations.iter().flat_map(|c| c.rhs.symbols()).collect()
    }

    /// `lhs - rhs` per equation for concrete coefficients.
    pub fn residuals(&self, op: &Operator, cand: &FactorizationCandidate) -> Vec<Expr> {
        self.equations.iter().map(|c| c.residual(op, cand)).collect()
    }

    fn scalar_style(&self) -> bool {
        self.template.shape == Shape::Scalar
    }

    /// `lhs = rhs` for one equation, in the same style as [`fmt::Display`].
    pub fn equation_text(&self, c: &Condition) -> String {
        let s = self.scalar_style();
        format!("{} = {}", c.lhs.scalar_display_if(s), c.rhs.scalar_display_if(s))
    }
}

impl fmt::Display for ConditionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.equations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            f.write_str(&self.equation_text(c))?;
        }
        Ok(())
    }
}

/// Generate the condition system of a template by expanding symbolic factors
/// and identifying coefficients. `n` must match the template's domain and
/// scalar templates need `m = 1`.
pub fn derive_conditions(template: Template, n: usize, m: usize) -> Result<ConditionSystem, ConditionsError> {
    if n != template.n() {
        return Err(ConditionsError::UnsupportedTemplate(format!("{template} with n = {n}")));
    }
    let cand = template.symbolic_candidate(m)?;
    let grid = cand.expand()?;
    let mut equations = Vec::new();
    for (p, row) in grid.iter().enumerate() {
        for (q, poly) in row.iter().enumerate() {
            let (p, q) = (p + 1, q + 1);
            let order = if p == q { 2 } else { 1 };
            identify(template, m, (p, q), order, poly, &mut equations)?;
        }
    }
    Ok(ConditionSystem { template, m, equations })
}

fn identify(
    t: Template,
    m: usize,
    (p, q): (usize, usize),
    order: usize,
    poly: &JetPolynomial,
    out: &mut Vec<Condition>,
) -> Result<(), ConditionsError> {
    let n = t.n();
    let mut matched = BTreeSet::new();
    for k in (0..=order).rev() {
        let slots = if k == 0 { vec![DerivIndex::identity(n)] } else { DerivIndex::all_of_order(n, k)? };
        let mut classes: Vec<(DerivIndex, Vec<DerivIndex>)> = Vec::new();
        for d in slots {
            let c = d.canonical();
            match classes.iter_mut().find(|(rep, _)| *rep == c) {
                Some((_, members)) => members.push(d),
                None => classes.push((c, vec![d])),
            }
        }
        for (rep, members) in classes {
            let var = VarId::jet(q, rep);
            let lhs = Expr::sum(members.iter().map(|d| Expr::sym(t.operator_symbol(m, p, q, d.order(), d.slot()))));
            let rhs = poly.coefficient(&[(var, 1)]);
            matched.insert(var);
            out.push(Condition { entry: (p, q), slot: Some((rep.order(), rep.slot())), lhs, rhs });
        }
    }
    let leftovers: Vec<Expr> = poly
        .terms()
        .filter(|(mono, _)| !matches!(mono.factors(), [(v, 1)] if matched.contains(v)))
        .map(|(_, c)| c.clone())
        .collect();
    if t.shape == Shape::Scalar {
        for c in leftovers {
            out.push(Condition { entry: (p, q), slot: None, lhs: Expr::zero(), rhs: c });
        }
        return Ok(());
    }
    // Matrix templates: every dependent-variable partial of a second-factor
    // coefficient that survives in an unmatched term must vanish.
    let mut atoms = BTreeSet::new();
    let mut rest = Vec::new();
    for c in leftovers {
        let found: Vec<Symbol> = c
            .symbols()
            .into_iter()
            .filter(|s| s.indices().first() == Some(&2) && s.derivs().iter().any(VarId::is_dependent))
            .collect();
        if found.is_empty() {
            rest.push(c);
        }
        atoms.extend(found);
    }
    for s in atoms {
        out.push(Condition { entry: (p, q), slot: None, lhs: Expr::zero(), rhs: Expr::sym(s) });
    }
    for c in rest {
        out.push(Condition { entry: (p, q), slot: None, lhs: Expr::zero(), rhs: c });
    }
    Ok(())
}

/// `(g[2,2] + g[2,3])^2 - 4 g[2,1] g[2,4]` of a two-variable operator.
pub fn discriminant(op: &DiffOperator) -> Expr {
    let mixed = op.g(2, 2) + op.g(2, 3);
    (mixed.pow(2) - Expr::int(4) * op.g(2, 1) * op.g(2, 4)).simplify()
}

#[cfg(test)]
mod tests;
