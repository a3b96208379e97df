//! Truncated multivariate Taylor arithmetic for pointwise operator
//! application, independent of the symbolic expansion.

use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::expr::{Expr, Func, Node, VarId};
use crate::jet::DerivIndex;
use crate::operator::DiffOperator;

/// Monomials `t^a` with `|a| <= order` in `n` variables and their products.
#[derive(Debug)]
pub(super) struct Layout {
    n: usize,
    monos: Vec<Vec<usize>>,
    mul: Vec<Vec<Option<usize>>>,
}

impl Layout {
    pub(super) fn new(n: usize, order: usize) -> Arc<Self> {
        let mut monos = vec![vec![0; n]];
        for deg in 1..=order {
            let mut next = Vec::new();
            gen(n, deg, &mut vec![0; n], 0, &mut next);
            monos.extend(next);
        }
        let pos = |a: &[usize]| monos.iter().position(|b| b == a);
        let mul = monos
            .iter()
            .map(|a| {
                monos
                    .iter()
                    .map(|b| {
                        let s: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                        pos(&s)
                    })
                    .collect()
            })
            .collect();
        Arc::new(Layout { n, monos, mul })
    }
}

fn gen(n: usize, left: usize, cur: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
    if i == n - 1 {
        cur[i] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[i] = k;
        gen(n, left - k, cur, i + 1, out);
    }
    cur[i] = 0;
}

#[derive(Debug, Clone)]
pub(super) struct Taylor {
    layout: Arc<Layout>,
    c: Vec<f64>,
}

impl Taylor {
    fn constant(layout: &Arc<Layout>, v: f64) -> Self {
        let mut c = vec![0.0; layout.monos.len()];
        c[0] = v;
        Taylor { layout: layout.clone(), c }
    }

    /// `x0 + t_axis`.
    pub(super) fn variable(layout: &Arc<Layout>, x0: f64, axis: usize) -> Self {
        let mut t = Taylor::constant(layout, x0);
        let mut e = vec![0; layout.n];
        e[axis - 1] = 1;
        if let Some(i) = layout.monos.iter().position(|m| *m == e) {
            t.c[i] = 1.0;
        }
        t
    }

    pub(super) fn value(&self) -> f64 {
        self.c[0]
    }

    pub(super) fn add(&self, o: &Taylor) -> Taylor {
        Taylor { layout: self.layout.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    fn scale(&self, k: f64) -> Taylor {
        Taylor { layout: self.layout.clone(), c: self.c.iter().map(|a| a * k).collect() }
    }

    fn mul(&self, o: &Taylor) -> Taylor {
        let mut c = vec![0.0; self.c.len()];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if let Some(k) = self.layout.mul[i][j] {
                    c[k] += a * b;
                }
            }
        }
        Taylor { layout: self.layout.clone(), c }
    }

    /// `f(a0 + h) = sum_j d[j] h^j` given the scaled derivatives
    /// `d[j] = f^(j)(a0) / j!`.
    fn compose(&self, d: &[f64]) -> Taylor {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Taylor::constant(&self.layout, d[0]);
        let mut pow = Taylor::constant(&self.layout, 1.0);
        for dj in &d[1..] {
            pow = pow.mul(&h);
            out = out.add(&pow.scale(*dj));
        }
        out
    }

    fn order(&self) -> usize {
        self.layout.monos.last().map(|m| m.iter().sum()).unwrap_or(0)
    }

    fn recip(&self) -> Option<Taylor> {
        let a = self.c[0];
        if a.abs() < 1e-300 {
            return None;
        }
        let d: Vec<f64> = (0..=self.order()).map(|j| (-1f64).powi(j as i32) / a.powi(j as i32 + 1)).collect();
        Some(self.compose(&d))
    }

    fn powi(&self, k: i64) -> Option<Taylor> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut out = Taylor::constant(&self.layout, 1.0);
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Some(out)
    }

    fn func(&self, f: Func) -> Option<Taylor> {
        let a = self.c[0];
        let k = self.order();
        let mut fact = 1.0;
        let mut d = Vec::with_capacity(k + 1);
        for j in 0..=k {
            if j > 0 {
                fact *= j as f64;
            }
            let deriv = match f {
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return None;
                    }
                    if j == 0 {
                        a.ln()
                    } else {
                        (-1f64).powi(j as i32 - 1) * (fact / j as f64) / a.powi(j as i32)
                    }
                }
                Func::Sin => [a.sin(), a.cos(), -a.sin(), -a.cos()][j % 4],
                Func::Cos => [a.cos(), -a.sin(), -a.cos(), a.sin()][j % 4],
                Func::Sqrt => {
                    if a <= 0.0 {
                        return None;
                    }
                    // falling factorial of 1/2
                    let ff: f64 = (0..j).map(|i| 0.5 - i as f64).product();
                    ff * a.powf(0.5 - j as f64)
                }
            };
            d.push(deriv / fact);
        }
        Some(self.compose(&d))
    }

    /// Partial along `t_axis`; the top order becomes meaningless and is
    /// dropped.
    fn derivative(&self, axis: usize) -> Taylor {
        let lay = &self.layout;
        let mut c = vec![0.0; self.c.len()];
        let top = self.order();
        for (i, a) in lay.monos.iter().enumerate() {
            if a.iter().sum::<usize>() == top {
                continue;
            }
            let mut up = a.clone();
            up[axis - 1] += 1;
            if let Some(j) = lay.monos.iter().position(|m| *m == up) {
                c[i] = self.c[j] * up[axis - 1] as f64;
            }
        }
        Taylor { layout: lay.clone(), c }
    }

    fn along(&self, d: DerivIndex) -> Taylor {
        d.axes().into_iter().fold(self.clone(), |acc, a| acc.derivative(a))
    }
}

/// Evaluate `e` with `x_i = x0_i + t_i` and `u^j = us[j-1]`. `None` on
/// symbols, jets, or a domain error.
pub(super) fn eval(e: &Expr, x: &[Taylor], us: &[Taylor]) -> Option<Taylor> {
    let lay = &x[0].layout;
    match e.node() {
        Node::Const(r) => Some(Taylor::constant(lay, r.to_f64()?)),
        Node::Var(VarId::Indep(i)) => x.get(i - 1).cloned(),
        Node::Var(VarId::Dep(j)) => us.get(j - 1).cloned(),
        Node::Var(VarId::Jet(..)) | Node::Sym(_) => None,
        Node::Fun(f, a) => eval(a, x, us)?.func(*f),
        Node::Sum(ts) => {
            let mut acc = Taylor::constant(lay, 0.0);
            for t in ts {
                acc = acc.add(&eval(t, x, us)?);
            }
            Some(acc)
        }
        Node::Product(fs) => {
            let mut acc = Taylor::constant(lay, 1.0);
            for f in fs {
                acc = acc.mul(&eval(f, x, us)?);
            }
            Some(acc)
        }
        Node::Power(b, k) => eval(b, x, us)?.powi(*k),
        Node::Div(a, b) => Some(eval(a, x, us)?.mul(&eval(b, x, us)?.recip()?)),
    }
}

/// `op` applied to `arg`, coefficients evaluated at `us`.
pub(super) fn apply(op: &DiffOperator, arg: &Taylor, x: &[Taylor], us: &[Taylor]) -> Option<Taylor> {
    let mut acc = Taylor::constant(&arg.layout, 0.0);
    for (d, c) in op.coeffs() {
        acc = acc.add(&eval(c, x, us)?.mul(&arg.along(*d)));
    }
    Some(acc)
}
