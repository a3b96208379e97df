//! A small antiderivative table: polynomials, polynomials times
//! `exp`, `sin` or `cos` of a linear argument, and `c / (a x + b)`.

use crate::expr::{exact_quotient, Expr, Func, Node, VarId};
use crate::Rational;

/// `sum c_i log(q_i) + rest`, with the logarithms kept apart so that
/// `exp(-F)` can become a product of powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Antiderivative {
    pub logs: Vec<(Rational, Expr)>,
    pub rest: Expr,
}

impl Antiderivative {
    pub fn to_expr(&self) -> Expr {
        let logs = self.logs.iter().map(|(c, q)| Expr::constant(c.clone()) * Expr::log(q.clone()));
        (Expr::sum(logs) + &self.rest).simplify()
    }

    /// `exp(sign * F)`, with integer multiples of logarithms as powers.
    pub fn exp_scaled(&self, sign: i64) -> Expr {
        let mut factors = vec![Expr::exp((Expr::int(sign) * &self.rest).simplify())];
        for (c, q) in &self.logs {
            let k = c * Rational::from_integer(sign.into());
            if k.is_integer() {
                let k = k.to_integer().try_into().unwrap_or(i64::MAX);
                factors.push(q.pow(k));
            } else {
                factors.push(Expr::exp(Expr::constant(k) * Expr::log(q.clone())));
            }
        }
        Expr::product(factors).simplify()
    }
}

/// Antiderivative of `f` in `x1` from the table, or `None`.
pub fn antiderivative(f: &Expr) -> Option<Antiderivative> {
    let x = VarId::x(1);
    let f = f.simplify();
    if let Some(cs) = f.coefficients_in(x) {
        if cs.iter().any(|c| c.depends_on(x)) {
            return None;
        }
        return Some(Antiderivative { logs: Vec::new(), rest: integrate_poly(&cs) });
    }
    if let Node::Div(num, den) = f.node() {
        if let Some(out) = over_linear(num, den) {
            return Some(out);
        }
    }
    let terms: Vec<Expr> = match f.node() {
        Node::Sum(ts) => ts.clone(),
        _ => vec![f.clone()],
    };
    let mut logs = Vec::new();
    let mut rest = Vec::new();
    for t in terms {
        if let Some(l) = reciprocal_linear(&t) {
            logs.push(l);
        } else {
            rest.push(term(&t)?);
        }
    }
    Some(Antiderivative { logs, rest: Expr::sum(rest).simplify() })
}

fn integrate_poly(cs: &[Expr]) -> Expr {
    Expr::sum(
        cs.iter()
            .enumerate()
            .map(|(k, c)| c / Expr::int(k as i64 + 1) * Expr::x(1).pow(k as i64 + 1)),
    )
    .simplify()
}

/// `(alpha, beta)` of `alpha x + beta` with constant `alpha != 0`.
fn linear(e: &Expr) -> Option<(Rational, Expr)> {
    let cs = e.coefficients_in(VarId::x(1))?;
    match cs.as_slice() {
        [b, a] if !b.depends_on(VarId::x(1)) => {
            let a = a.as_const()?.clone();
            (a != Rational::from_integer(0.into())).then(|| (a, b.clone()))
        }
        _ => None,
    }
}

/// `c / (a x + b)` gives `(c / a, x + b / a)`.
fn reciprocal_linear(t: &Expr) -> Option<(Rational, Expr)> {
    let q = (Expr::one() / t).simplify();
    let (a, _) = linear(&q)?;
    let c = (t * &q).simplify();
    let c = c.as_const()?;
    Some((c / &a, (q / Expr::constant(a)).simplify()))
}

/// `n / (a x + b)` with polynomial `n`: quotient plus `r / (a x + b)`.
fn over_linear(num: &Expr, den: &Expr) -> Option<Antiderivative> {
    let x = VarId::x(1);
    let (a, b) = linear(den)?;
    let root = (-b / Expr::constant(a.clone())).simplify();
    let r = num.subst(x, &root).simplify();
    let r_const = r.as_const()?.clone();
    let quotient = exact_quotient(&(num - &r).simplify(), den)?;
    let mut out = antiderivative(&quotient)?;
    if r_const != Rational::from_integer(0.into()) {
        out.logs.push((r_const / &a, (den / Expr::constant(a)).simplify()));
    }
    Some(out)
}

/// One product term: polynomial times at most one `exp`, `sin` or `cos` of
/// a linear argument.
fn term(t: &Expr) -> Option<Expr> {
    let x = VarId::x(1);
    let factors: Vec<Expr> = match t.node() {
        Node::Product(fs) => fs.clone(),
        _ => vec![t.clone()],
    };
    let mut special: Option<(Func, Expr)> = None;
    let mut poly = Vec::new();
    for f in factors {
        match f.node() {
            Node::Fun(func @ (Func::Exp | Func::Sin | Func::Cos), arg) if arg.depends_on(x) => {
                if special.is_some() {
                    return None;
                }
                special = Some((*func, arg.clone()));
            }
            _ => poly.push(f),
        }
    }
    let p = Expr::product(poly).simplify();
    if p.coefficients_in(x)?.iter().any(|c| c.depends_on(x)) {
        return None;
    }
    let Some((func, arg)) = special else {
        return Some(integrate_poly(&p.coefficients_in(x)?));
    };
    let (a, _) = linear(&arg)?;
    let a = Expr::constant(a);
    Some(match func {
        Func::Exp => {
            // e^{ax} sum_k (-1)^k p^(k) / a^(k+1)
            let mut sum = Vec::new();
            let mut d = p.clone();
            let mut k = 0;
            while !d.is_zero() {
                sum.push(Expr::int(if k % 2 == 0 { 1 } else { -1 }) * &d / a.pow(k + 1));
                d = d.diff(x);
                k += 1;
            }
            (Expr::sum(sum) * Expr::exp(arg)).simplify()
        }
        _ => trig(func, &arg, &a, &p),
    })
}

// int p sin = -p cos / a + (1/a) int p' cos
// int p cos =  p sin / a - (1/a) int p' sin
fn trig(func: Func, arg: &Expr, a: &Expr, p: &Expr) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let dp = p.diff(VarId::x(1));
    let out = match func {
        Func::Sin => -(p * Expr::cos(arg.clone())) / a + trig(Func::Cos, arg, a, &dp) / a,
        _ => p * Expr::sin(arg.clone()) / a - trig(Func::Sin, arg, a, &dp) / a,
    };
    out.simplify()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn check(f: &str) {
        let f = parse_expr(f).unwrap().simplify();
        let big_f = antiderivative(&f).unwrap_or_else(|| panic!("no antiderivative for {f}")).to_expr();
        assert!((big_f.diff(VarId::x(1)) - &f).is_identically_zero(), "{f}: {big_f}");
    }

    #[test]
    fn table_entries() {
        for f in [
            "0",
            "3",
            "x1^2 - 2*x1 + 1/3",
            "exp(2*x1)",
            "x1^2*exp(-x1)",
            "3/(x1+2)",
            "1/(2*x1+1) + x1",
            "sin(3*x1)",
            "x1*cos(x1)",
            "exp(x1) + sin(x1)",
        ] {
            check(f);
        }
        assert!(antiderivative(&parse_expr("exp(x1^2)").unwrap()).is_none());
        assert!(antiderivative(&parse_expr("1/(x1^2+1)").unwrap()).is_none());
    }

    #[test]
    fn logs_become_powers() {
        let a = antiderivative(&parse_expr("2/(x1+1)").unwrap()).unwrap();
        assert_eq!(a.exp_scaled(-1), parse_expr("1/(x1+1)^2").unwrap().simplify());
    }
}
