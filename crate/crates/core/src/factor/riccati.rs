use crate::conditions::FactorizationCandidate;
use crate::expr::{Expr, VarId};
use crate::operator::DiffOperator;
use crate::Rational;

use super::{first_order_ode, require_linear_ode, rational_roots, FactorError, SearchConfig};

/// The equation for `Y = b[2,0,1]` in a fixed gauge `(b[1,1,1], b[2,1,1])`
/// with `b[1,1,1] b[2,1,1] = g[2,1]`, stored with denominators cleared:
///
/// `g21 Y' - b111 Y^2 + (g11 - b111 b211') Y - b211 g01 = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiccatiProblem {
    /// Coefficient of `Y'`.
    pub lead: Expr,
    /// Coefficient of `Y^2`.
    pub quad: Expr,
    /// Coefficient of `Y`.
    pub linear: Expr,
    pub constant: Expr,
    pub gauge: (Expr, Expr),
    /// `(g[2,1], g[1,1], g[0,1])`.
    pub g: (Expr, Expr, Expr),
}

impl RiccatiProblem {
    /// The default gauge `b[1,1,1] = g[2,1]`, `b[2,1,1] = 1`.
    pub fn new(op: &DiffOperator) -> Result<Self, FactorError> {
        Self::with_gauge(op, op.g(2, 1).simplify(), Expr::one())
    }

    pub fn with_gauge(op: &DiffOperator, b111: Expr, b211: Expr) -> Result<Self, FactorError> {
        require_linear_ode(op)?;
        let (g21, g11, g01) = (op.g(2, 1).simplify(), op.g(1, 1).simplify(), op.g(0, 1).simplify());
        if !(&b111 * &b211 - &g21).is_identically_zero() {
            return Err(FactorError::UnsupportedTemplate(format!(
                "gauge ({b111}, {b211}) does not multiply to g[2,1] = {g21}"
            )));
        }
        let x = VarId::x(1);
        Ok(RiccatiProblem {
            lead: g21.clone(),
            quad: (-&b111).simplify(),
            linear: (&g11 - &b111 * b211.diff(x)).simplify(),
            constant: (-(&b211 * &g01)).simplify(),
            gauge: (b111, b211),
            g: (g21, g11, g01),
        })
    }

    /// Coefficients of the monic form `Y' + c2 Y^2 + c1 Y + c0`, as
    /// `[c2, c1, c0]`.
    pub fn normalized(&self) -> [Expr; 3] {
        [&self.quad / &self.lead, &self.linear / &self.lead, &self.constant / &self.lead].map(|e| e.simplify())
    }

    pub fn residual(&self, y: &Expr) -> Expr {
        (&self.lead * y.diff(VarId::x(1)) + &self.quad * y.pow(2) + &self.linear * y + &self.constant).simplify()
    }

    /// `X = b[1,0,1] = (g11 - b111 Y - b111 b211') / b211`.
    pub fn companion(&self, y: &Expr) -> Expr {
        let (b111, b211) = &self.gauge;
        ((&self.g.1 - b111 * y - b111 * b211.diff(VarId::x(1))) / b211).simplify()
    }

    /// `(b111 D + X)(b211 D + Y)`.
    pub fn candidate(&self, y: &Expr) -> Result<FactorizationCandidate, FactorError> {
        let (b111, b211) = &self.gauge;
        Ok(FactorizationCandidate::Scalar(vec![
            first_order_ode(b111.clone(), self.companion(y))?,
            first_order_ode(b211.clone(), y.simplify())?,
        ]))
    }
}

fn rational_poly(e: &Expr, what: &str) -> Result<Vec<Rational>, FactorError> {
    let bad = || FactorError::NonPolynomialCoefficients(format!("{what} = {e} is not a polynomial in x1"));
    let cs = e.coefficients_in(VarId::x(1)).ok_or_else(bad)?;
    let mut out = cs.iter().map(|c| c.as_const().cloned().ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?;
    while out.last().is_some_and(|c| c == &Rational::from_integer(0.into())) {
        out.pop();
    }
    Ok(out)
}

fn degree(p: &[Rational]) -> Option<usize> {
    p.len().checked_sub(1)
}

/// Every polynomial `Y` of degree at most `cfg.ansatz_degree` solving the
/// equation exactly, found by matching powers of `x1` from the top down.
/// Each returned `Y` has zero residual. An empty list means no polynomial
/// solution exists within the bound, except that branches whose remaining
/// constraints couple several free coefficients are abandoned.
pub fn solve_riccati_ansatz(prob: &RiccatiProblem, cfg: &SearchConfig) -> Result<Vec<Expr>, FactorError> {
    let lead = rational_poly(&prob.lead, "g[2,1]")?;
    let quad = rational_poly(&prob.quad, "the Y^2 coefficient")?;
    let linear = rational_poly(&prob.linear, "the Y coefficient")?;
    let constant = rational_poly(&prob.constant, "the constant term")?;
    let mut found: Vec<Expr> = Vec::new();
    if constant.is_empty() {
        found.push(Expr::zero());
    }
    for d in 0..=cfg.ansatz_degree {
        let mut top = 0;
        let shifts = [(degree(&lead), (d as isize) - 1), (degree(&quad), 2 * d as isize), (degree(&linear), d as isize)];
        for (deg, s) in shifts {
            if let Some(k) = deg {
                top = top.max(k as isize + s);
            }
        }
        if let Some(k) = degree(&constant) {
            top = top.max(k as isize);
        }
        let y = Expr::sum((0..=d).map(|j| Expr::u(j + 1) * Expr::x(1).pow(j as i64)));
        let r = prob.residual(&y);
        let coeffs = r.coefficients_in(VarId::x(1)).expect("polynomial by construction");
        let coeff = |t: isize| if t >= 0 { coeffs.get(t as usize).cloned().unwrap_or_else(Expr::zero) } else { Expr::zero() };
        let eqs: Vec<Expr> = (0..=top).rev().map(coeff).collect();
        let mut branches = vec![Branch::new(d)];
        for (i, eq) in eqs.iter().enumerate() {
            branches = branches.into_iter().flat_map(|b| b.step(i, eq)).collect();
        }
        for b in branches {
            for vals in b.resolve() {
                let y = Expr::sum(vals.iter().enumerate().map(|(j, c)| c * Expr::x(1).pow(j as i64))).simplify();
                if prob.residual(&y).is_zero() && !found.contains(&y) {
                    found.push(y);
                }
            }
        }
    }
    Ok(found)
}

// Unknown y_j lives in the placeholder variable u(j + 1).
fn unknown(j: usize) -> VarId {
    VarId::u(j + 1)
}

#[derive(Debug, Clone)]
struct Branch {
    d: usize,
    vals: Vec<Option<Expr>>,
    params: Vec<usize>,
    constraints: Vec<Expr>,
}

impl Branch {
    fn new(d: usize) -> Self {
        Branch { d, vals: vec![None; d + 1], params: Vec::new(), constraints: Vec::new() }
    }

    fn substitute(&self, e: &Expr) -> Expr {
        e.subst_vars(&|v| match v {
            VarId::Dep(j) => self.vals.get(j - 1).cloned().flatten(),
            _ => None,
        })
        .simplify()
    }

    fn constrain(mut self, eq: Expr) -> Option<Self> {
        if eq.is_zero() {
            return Some(self);
        }
        if eq.as_const().is_some() {
            return None;
        }
        self.constraints.push(eq);
        Some(self)
    }

    /// Use the coefficient of `x^(top - i)`, which involves `y_d .. y_(d-i)`
    /// only.
    fn step(self, i: usize, eq: &Expr) -> Vec<Branch> {
        let eq = self.substitute(eq);
        if i > self.d {
            return self.constrain(eq).into_iter().collect();
        }
        let v = self.d - i;
        let cs = eq.coefficients_in(unknown(v)).expect("polynomial in the unknowns");
        if i == 0 {
            let Some(rs) = cs.iter().map(|c| c.as_const().cloned()).collect::<Option<Vec<_>>>() else {
                return Vec::new();
            };
            if rs.iter().all(|c| c == &Rational::from_integer(0.into())) {
                let mut b = self;
                b.params.push(v);
                return vec![b];
            }
            return rational_roots(&rs)
                .into_iter()
                .filter(|r| *r != Rational::from_integer(0.into()))
                .map(|r| {
                    let mut b = self.clone();
                    b.vals[v] = Some(Expr::constant(r));
                    b
                })
                .collect();
        }
        match cs.as_slice() {
            [c0, c1] if c1.as_const().is_some() && !c1.is_zero() => {
                let mut b = self;
                b.vals[v] = Some((-(c0 / c1)).simplify());
                vec![b]
            }
            _ => {
                let mut b = self;
                b.params.push(v);
                b.constrain(eq).into_iter().collect()
            }
        }
    }

    /// Fix the free coefficients from the collected constraints.
    fn resolve(self) -> Vec<Vec<Expr>> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(mut b) = stack.pop() {
            let cons: Vec<Expr> = b.constraints.iter().map(|c| b.substitute(c)).collect();
            if cons.iter().any(|c| c.as_const().is_some_and(|k| *k != Rational::from_integer(0.into()))) {
                continue;
            }
            b.constraints = cons.into_iter().filter(|c| !c.is_zero()).collect();
            b.params.retain(|&p| b.vals[p].is_none());
            if b.constraints.is_empty() {
                for &p in &b.params {
                    // the leading coefficient must stay non-zero
                    b.vals[p] = Some(if p == b.d { Expr::one() } else { Expr::zero() });
                }
                let vals: Vec<Expr> = b.vals.iter().map(|v| b.substitute(v.as_ref().expect("all fixed"))).collect();
                if vals.iter().all(|v| v.as_const().is_some()) {
                    out.push(vals);
                }
                continue;
            }
            let univariate = b.constraints.iter().find_map(|c| {
                let vars: Vec<usize> = b.params.iter().copied().filter(|&p| c.depends_on(unknown(p))).collect();
                match vars.as_slice() {
                    [p] => Some((*p, c.clone())),
                    _ => None,
                }
            });
            let Some((p, c)) = univariate else {
                continue;
            };
            let Some(rs) = c
                .coefficients_in(unknown(p))
                .and_then(|cs| cs.iter().map(|k| k.as_const().cloned()).collect::<Option<Vec<_>>>())
            else {
                continue;
            };
            for r in rational_roots(&rs) {
                if p == b.d && r == Rational::from_integer(0.into()) {
                    continue;
                }
                let mut nb = b.clone();
                nb.vals[p] = Some(Expr::constant(r));
                stack.push(nb);
            }
        }
        out
    }
}
