//! Partial derivatives and substitution.

use super::{Expr, Func, Node, Symbol, VarId};

impl Expr {
    /// Partial derivative along `v`, all other variables held fixed.
    /// Jet variables count as independent symbols. The result is simplified.
    pub fn diff(&self, v: VarId) -> Expr {
        self.diff_raw(v).simplify()
    }

    fn diff_raw(&self, v: VarId) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sym(s) => match s.differentiated(v) {
                Some(ds) => Expr::sym(ds),
                None => Expr::zero(),
            },
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.diff_raw(v))),
            Node::Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let d = fs[i].diff_raw(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors = fs.clone();
                    factors[i] = d;
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Power(b, k) => {
                let db = b.diff_raw(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::int(*k), b.pow(k - 1), db])
            }
            Node::Div(a, b) => {
                // (a'b - ab') / b^2
                let da = a.diff_raw(v);
                let db = b.diff_raw(v);
                if db.is_zero() {
                    return Expr::from_node(Node::Div(da, b.clone()));
                }
                let num = da * b - a * db;
                Expr::from_node(Node::Div(num, b.pow(2)))
            }
            Node::Fun(f, a) => {
                let da = a.diff_raw(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => Expr::from_node(Node::Power(a.clone(), -1)),
                    Func::Sin => Expr::cos(a.clone()),
                    Func::Cos => -Expr::sin(a.clone()),
                    Func::Sqrt => Expr::product([
                        Expr::ratio(1, 2),
                        Expr::from_node(Node::Power(self.clone(), -1)),
                    ]),
                };
                Expr::product([outer, da])
            }
        }
    }

    /// Replace variables; `map` returns `None` to keep a variable. Symbols
    /// are left alone. The result is simplified.
    pub fn subst_vars(&self, map: &dyn Fn(VarId) -> Option<Expr>) -> Expr {
        self.rebuild(&|e| match e.node() {
            Node::Var(v) => map(*v),
            _ => None,
        })
        .simplify()
    }

    /// Replace one variable by an expression.
    pub fn subst(&self, v: VarId, by: &Expr) -> Expr {
        self.subst_vars(&|w| (w == v).then(|| by.clone()))
    }

    /// Replace coefficient symbols. `map` receives the undifferentiated
    /// symbol; derivatives of a replaced symbol are taken of its
    /// replacement. The result is simplified.
    pub fn subst_symbols(&self, map: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
        self.rebuild(&|e| match e.node() {
            Node::Sym(s) => map(&s.base()).map(|r| {
                s.derivs().iter().fold(r, |acc, d| acc.diff_raw(*d))
            }),
            _ => None,
        })
        .simplify()
    }

    // Bottom-up rewrite; `leaf` may replace any node before recursion.
    fn rebuild(&self, leaf: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = leaf(self) {
            return r;
        }
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Sym(_) => self.clone(),
            Node::Fun(f, a) => Expr::fun(*f, a.rebuild(leaf)),
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.rebuild(leaf))),
            Node::Product(fs) => Expr::product(fs.iter().map(|t| t.rebuild(leaf))),
            Node::Power(b, k) => Expr::from_node(Node::Power(b.rebuild(leaf), *k)),
            Node::Div(a, b) => Expr::from_node(Node::Div(a.rebuild(leaf), b.rebuild(leaf))),
        }
    }
}
