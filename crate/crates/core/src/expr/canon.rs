//! Canonical form.
//!
//! An expression is normalized to a quotient of two sparse polynomials whose
//! "variables" are atoms: variables, coefficient symbols and function
//! applications with canonical arguments. The quotient is reduced by
//! cancelling common monomial content and by exact polynomial division when
//! the denominator divides the numerator; the denominator is made monic
//! (leading coefficient 1 in graded lexicographic order).
//!
//! Rewrite rules applied to atoms:
//! - `exp(a) exp(b) = exp(a + b)`, so a monomial holds at most one `exp`,
//!   and `exp` in a single-term denominator moves up as `exp(-a)`
//! - `exp(0) = 1`, `log(1) = 0`, `sin(0) = 0`, `cos(0) = 1`
//! - `sqrt(c)` of a rational constant is reduced to `r sqrt(s)` with `s` a
//!   square-free integer, and `sqrt(p)^2 = p` for polynomial `p`
//!
//! Polynomial expressions therefore have a unique canonical tree; anything
//! else is normalized on a best-effort basis.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{Expr, Func, Node, VarId};
use crate::Rational;

// Iteration cap for the division and square-root loops.
const DIVISION_STEPS: usize = 4096;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Mono(Vec<(Expr, u32)>);

impl Mono {
    fn one() -> Self {
        Mono(Vec::new())
    }

    fn atom(a: Expr) -> Self {
        Mono(vec![(a, 1)])
    }

    fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> u64 {
        self.0.iter().map(|(_, e)| u64::from(*e)).sum()
    }

    fn has_exp(&self) -> bool {
        self.0.iter().any(|(a, _)| is_exp(a))
    }

    fn exponent_of(&self, atom: &Expr) -> u32 {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    fn divides(&self, other: &Mono) -> bool {
        self.0.iter().all(|(a, e)| other.exponent_of(a) >= *e)
    }

    // Caller guarantees divisibility.
    fn quotient(&self, div: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, e) in &self.0 {
            let r = e - div.exponent_of(a);
            if r > 0 {
                out.push((a.clone(), r));
            }
        }
        Mono(out)
    }

    fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        for (a, e) in &self.0 {
            let f = other.exponent_of(a);
            if f > 0 {
                out.push((a.clone(), (*e).min(f)));
            }
        }
        Mono(out)
    }

    fn insert(&mut self, atom: Expr, e: u32) {
        match self.0.binary_search_by(|(a, _)| a.cmp(&atom)) {
            Ok(i) => self.0[i].1 += e,
            Err(i) => self.0.insert(i, (atom, e)),
        }
    }

    fn to_expr_factors(&self) -> Vec<Expr> {
        self.0
            .iter()
            .map(|(a, e)| if *e == 1 { a.clone() } else { a.pow(i64::from(*e)) })
            .collect()
    }
}

/// Graded lexicographic order; `Greater` means "leads".
fn grlex(a: &Mono, b: &Mono) -> Ordering {
    let by_degree = a.degree().cmp(&b.degree());
    if by_degree != Ordering::Equal {
        return by_degree;
    }
    let (mut i, mut j) = (0, 0);
    while i < a.0.len() && j < b.0.len() {
        let (aa, ea) = &a.0[i];
        let (bb, eb) = &b.0[j];
        match aa.cmp(bb) {
            Ordering::Equal => {
                if ea != eb {
                    return ea.cmp(eb);
                }
                i += 1;
                j += 1;
            }
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    (a.0.len() - i).cmp(&(b.0.len() - j))
}

fn is_exp(a: &Expr) -> bool {
    matches!(a.node(), Node::Fun(Func::Exp, _))
}

fn exp_arg(a: &Expr) -> Option<&Expr> {
    match a.node() {
        Node::Fun(Func::Exp, arg) => Some(arg),
        _ => None,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Poly(BTreeMap<Mono, Rational>);

impl Poly {
    fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Mono::one(), c);
        p
    }

    fn one() -> Self {
        Poly::constant(Rational::one())
    }

    fn atom(a: Expr) -> Self {
        let mut p = Poly::zero();
        p.add_term(Mono::atom(a), Rational::one());
        p
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => self.0.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    fn has_exp(&self) -> bool {
        self.0.keys().any(Mono::has_exp)
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c);
        }
        out
    }

    fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let c = ca * cb;
                match mono_mul(ma, mb) {
                    MonoProduct::Plain(k, m) => out.add_term(m, c * k),
                    MonoProduct::General(p) => {
                        for (m, k) in p.0 {
                            out.add_term(m, &c * k);
                        }
                    }
                }
            }
        }
        out
    }

    fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn leading(&self) -> Option<(&Mono, &Rational)> {
        self.0.iter().max_by(|a, b| grlex(a.0, b.0))
    }

    fn content(&self) -> Option<Mono> {
        let mut it = self.0.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |g, m| g.gcd(m)))
    }

    fn divide_mono(&self, m: &Mono) -> Poly {
        Poly(self.0.iter().map(|(t, c)| (t.quotient(m), c.clone())).collect())
    }

    fn to_expr(&self) -> Expr {
        let mut terms: Vec<(&Mono, &Rational)> = self.0.iter().collect();
        terms.sort_by(|a, b| grlex(b.0, a.0));
        let exprs: Vec<Expr> = terms
            .into_iter()
            .map(|(m, c)| {
                let mut factors = m.to_expr_factors();
                if factors.is_empty() {
                    return Expr::constant(c.clone());
                }
                if !c.is_one() {
                    factors.insert(0, Expr::constant(c.clone()));
                }
                if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::from_node(Node::Product(factors))
                }
            })
            .collect();
        match exprs.len() {
            0 => Expr::zero(),
            1 => exprs.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Sum(exprs)),
        }
    }
}

enum MonoProduct {
    Plain(Rational, Mono),
    General(Poly),
}

fn mono_mul(a: &Mono, b: &Mono) -> MonoProduct {
    if a.is_one() {
        return MonoProduct::Plain(Rational::one(), b.clone());
    }
    if b.is_one() {
        return MonoProduct::Plain(Rational::one(), a.clone());
    }
    let mut m = a.clone();
    for (atom, e) in &b.0 {
        m.insert(atom.clone(), *e);
    }
    reduce_mono(m)
}

// Apply the exp and sqrt product rules to a freshly multiplied monomial.
fn reduce_mono(mut m: Mono) -> MonoProduct {
    let exps = m.0.iter().filter(|(a, _)| is_exp(a)).count();
    if exps > 1 || m.0.iter().any(|(a, e)| is_exp(a) && *e > 1) {
        let mut arg_terms = Vec::new();
        m.0.retain(|(a, e)| match exp_arg(a) {
            Some(arg) => {
                arg_terms.push(Expr::product([Expr::int(i64::from(*e)), arg.clone()]));
                false
            }
            None => true,
        });
        let arg = simplify(&Expr::sum(arg_terms));
        if !arg.is_zero() {
            m.insert(Expr::exp(arg), 1);
        }
    }
    let mut coeff = Rational::one();
    let mut extra: Option<Poly> = None;
    for (atom, e) in m.0.iter_mut() {
        if *e < 2 {
            continue;
        }
        let Node::Fun(Func::Sqrt, arg) = atom.node() else { continue };
        let half = *e / 2;
        if let Some(c) = arg.as_const() {
            coeff *= num_traits::pow(c.clone(), half as usize);
            *e %= 2;
        } else {
            let rf = to_rf(arg);
            if rf.den.is_one() {
                let p = rf.num.pow(half);
                extra = Some(match extra {
                    Some(q) => q.mul(&p),
                    None => p,
                });
                *e %= 2;
            }
        }
    }
    m.0.retain(|(_, e)| *e > 0);
    match extra {
        None => MonoProduct::Plain(coeff, m),
        Some(p) => {
            let mut base = Poly::zero();
            base.add_term(m, coeff);
            MonoProduct::General(base.mul(&p))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    fn poly(p: Poly) -> Self {
        RatFun { num: p, den: Poly::one() }
    }

    fn constant(c: Rational) -> Self {
        RatFun::poly(Poly::constant(c))
    }

    fn atom(a: Expr) -> Self {
        RatFun::poly(Poly::atom(a))
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn add(&self, other: &RatFun) -> RatFun {
        if self.den == other.den {
            return normalize(self.num.add(&other.num), self.den.clone());
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        normalize(num, self.den.mul(&other.den))
    }

    fn mul(&self, other: &RatFun) -> RatFun {
        if self.den.is_one() && other.den.is_one() {
            return normalize(self.num.mul(&other.num), Poly::one());
        }
        normalize(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    fn inv(&self) -> Option<RatFun> {
        if self.num.is_zero() {
            return None;
        }
        Some(normalize(self.den.clone(), self.num.clone()))
    }

    fn pow(&self, k: i64) -> Option<RatFun> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let e = u32::try_from(k.unsigned_abs()).ok()?;
        Some(normalize(base.num.pow(e), base.den.pow(e)))
    }

    fn to_expr(&self) -> Expr {
        let num = self.num.to_expr();
        if self.den.is_one() {
            num
        } else {
            Expr::from_node(Node::Div(num, self.den.to_expr()))
        }
    }
}

fn normalize(mut num: Poly, mut den: Poly) -> RatFun {
    debug_assert!(!den.is_zero());
    if num.is_zero() {
        return RatFun::poly(Poly::zero());
    }
    if let Some(c) = den.as_constant() {
        return RatFun::poly(num.scale(&c.recip()));
    }
    if den.0.len() == 1 {
        let (m, c) = den.0.into_iter().next().unwrap();
        num = num.scale(&c.recip());
        let mut m = m;
        if let Some(pos) = m.0.iter().position(|(a, _)| is_exp(a)) {
            let (atom, _) = m.0.remove(pos);
            let arg = exp_arg(&atom).unwrap();
            let moved = simplify(&-arg);
            num = num.mul(&Poly::atom(Expr::exp(moved)));
        }
        den = Poly::zero();
        den.add_term(m, Rational::one());
        if den.is_one() {
            return RatFun::poly(num);
        }
    }
    let g = num.content().unwrap().gcd(&den.content().unwrap());
    if !g.is_one() {
        num = num.divide_mono(&g);
        den = den.divide_mono(&g);
        if den.is_one() {
            return RatFun::poly(num);
        }
    }
    if den.0.len() > 1 && !num.has_exp() && !den.has_exp() {
        if let Some(q) = poly_divide(&num, &den) {
            return RatFun::poly(q);
        }
    }
    let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
    if !lc.is_one() {
        let k = lc.recip();
        num = num.scale(&k);
        den = den.scale(&k);
    }
    RatFun { num, den }
}

// Exact quotient num / den, or None if den does not divide num.
fn poly_divide(num: &Poly, den: &Poly) -> Option<Poly> {
    let (lm, lc) = den.leading()?;
    let (lm, lc) = (lm.clone(), lc.clone());
    let mut rem = num.clone();
    let mut quot = Poly::zero();
    for _ in 0..DIVISION_STEPS {
        let Some((rm, rc)) = rem.leading() else {
            return Some(quot);
        };
        if !lm.divides(rm) {
            return None;
        }
        let mut t = Poly::zero();
        t.add_term(rm.quotient(&lm), rc / &lc);
        rem = rem.sub(&t.mul(den));
        quot = quot.add(&t);
    }
    None
}

fn rational_sqrt_exact(c: &Rational) -> Option<Rational> {
    if c.is_negative() {
        return None;
    }
    let n = c.numer().sqrt();
    let d = c.denom().sqrt();
    (&n * &n == *c.numer() && &d * &d == *c.denom()).then(|| Rational::new(n, d))
}

/// Exact square root of a non-negative rational, if it is rational.
pub fn rational_sqrt(c: &Rational) -> Option<Rational> {
    rational_sqrt_exact(c)
}

// sqrt(c) = r * sqrt(s) with s a square-free (up to trial bound) integer.
fn sqrt_const(c: &Rational) -> RatFun {
    if c.is_negative() {
        return RatFun::atom(Expr::sqrt(Expr::constant(c.clone())));
    }
    if let Some(r) = rational_sqrt_exact(c) {
        return RatFun::constant(r);
    }
    // sqrt(p/q) = sqrt(p q) / q
    let mut s: BigInt = c.numer() * c.denom();
    let mut outside = BigInt::one();
    let mut f = BigInt::from(2);
    let bound = BigInt::from(10_000);
    while f <= bound && &f * &f <= s {
        let sq = &f * &f;
        while s.is_multiple_of(&sq) {
            s /= &sq;
            outside *= &f;
        }
        f += 1;
    }
    let k = Rational::new(outside, c.denom().clone());
    let atom = Expr::sqrt(Expr::constant(Rational::from_integer(s)));
    RatFun::poly(Poly::atom(atom).scale(&k))
}

fn make_fun(f: Func, arg: Expr) -> RatFun {
    match f {
        Func::Exp if arg.is_zero() => RatFun::constant(Rational::one()),
        Func::Log if arg.is_one() => RatFun::constant(Rational::zero()),
        Func::Sin if arg.is_zero() => RatFun::constant(Rational::zero()),
        Func::Cos if arg.is_zero() => RatFun::constant(Rational::one()),
        Func::Sqrt => match arg.as_const() {
            Some(c) => sqrt_const(c),
            None => RatFun::atom(Expr::sqrt(arg)),
        },
        _ => RatFun::atom(Expr::fun(f, arg)),
    }
}

// Marker for a quotient whose denominator is identically zero. Kept as an
// opaque atom so simplification stays total; evaluation reports it.
fn singular(num: &RatFun) -> RatFun {
    RatFun::atom(Expr::from_node(Node::Div(num.to_expr(), Expr::zero())))
}

fn to_rf(e: &Expr) -> RatFun {
    match e.node() {
        Node::Const(c) => RatFun::constant(c.clone()),
        Node::Var(_) | Node::Sym(_) => RatFun::atom(e.clone()),
        Node::Fun(f, a) => make_fun(*f, simplify(a)),
        Node::Sum(ts) => {
            // Collect polynomial summands first; one normalization for them.
            let mut poly = Poly::zero();
            let mut rest: Option<RatFun> = None;
            for t in ts {
                let r = to_rf(t);
                if r.den.is_one() {
                    poly = poly.add(&r.num);
                } else {
                    rest = Some(match rest {
                        Some(acc) => acc.add(&r),
                        None => r,
                    });
                }
            }
            let p = RatFun::poly(poly);
            match rest {
                Some(r) => r.add(&p),
                None => p,
            }
        }
        Node::Product(fs) => {
            let mut acc = RatFun::constant(Rational::one());
            for f in fs {
                acc = acc.mul(&to_rf(f));
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Node::Power(b, k) => {
            let base = to_rf(b);
            base.pow(*k).unwrap_or_else(|| singular(&RatFun::constant(Rational::one())))
        }
        Node::Div(a, b) => {
            let num = to_rf(a);
            match to_rf(b).inv() {
                Some(inv) => num.mul(&inv),
                None => singular(&num),
            }
        }
    }
}

pub(super) fn simplify(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Var(_) | Node::Sym(_) => e.clone(),
        _ => to_rf(e).to_expr(),
    }
}

/// `a / b` when `b` divides `a` as polynomials over their atoms.
pub fn exact_quotient(a: &Expr, b: &Expr) -> Option<Expr> {
    let ra = to_rf(a);
    let rb = to_rf(b);
    if rb.is_zero() {
        return None;
    }
    if ra.is_zero() {
        return Some(Expr::zero());
    }
    if !ra.den.is_one() || !rb.den.is_one() {
        return None;
    }
    if let Some(c) = rb.num.as_constant() {
        return Some(ra.num.scale(&c.recip()).to_expr());
    }
    if ra.num.has_exp() || rb.num.has_exp() {
        return None;
    }
    poly_divide(&ra.num, &rb.num).map(|q| q.to_expr())
}

/// Square root of a polynomial that is a perfect square, with positive
/// leading coefficient.
pub fn poly_sqrt(a: &Expr) -> Option<Expr> {
    let r = to_rf(a);
    if r.is_zero() {
        return Some(Expr::zero());
    }
    if !r.den.is_one() || r.num.has_exp() {
        return None;
    }
    let p = r.num;
    let (lm, lc) = p.leading()?;
    let root_c = rational_sqrt_exact(lc)?;
    if lm.0.iter().any(|(_, e)| e % 2 == 1) {
        return None;
    }
    let root_m = Mono(lm.0.iter().map(|(a, e)| (a.clone(), e / 2)).collect());
    let mut s = Poly::zero();
    s.add_term(root_m.clone(), root_c.clone());
    let two_lead = &root_c * Rational::from_integer(BigInt::from(2));
    for _ in 0..DIVISION_STEPS {
        let rem = p.sub(&s.mul(&s));
        let Some((rm, rc)) = rem.leading() else {
            return Some(s.to_expr());
        };
        // The remainder must lead strictly below the square of the root.
        if !root_m.divides(rm) || grlex(rm, &Mono(lm.0.clone())) != Ordering::Less {
            return None;
        }
        let tm = rm.quotient(&root_m);
        if grlex(&tm, &root_m) != Ordering::Less {
            return None;
        }
        s.add_term(tm, rc / &two_lead);
    }
    None
}

/// Coefficients of `e` as a polynomial in the variable `v`, lowest power
/// first. `None` if `e` is not polynomial in `v` (for instance `v` occurs
/// in a denominator or inside a function or symbol).
pub(super) fn coefficients_in(e: &Expr, v: VarId) -> Option<Vec<Expr>> {
    let r = to_rf(e);
    let var = Expr::var(v);
    let atom_free = |a: &Expr| *a == var || !a.depends_on(v);
    if r.den.0.keys().flat_map(|m| m.0.iter()).any(|(a, _)| a.depends_on(v)) {
        return None;
    }
    let mut by_power: BTreeMap<u32, Poly> = BTreeMap::new();
    for (m, c) in &r.num.0 {
        if !m.0.iter().all(|(a, _)| atom_free(a)) {
            return None;
        }
        let k = m.exponent_of(&var);
        let rest = Mono(m.0.iter().filter(|(a, _)| *a != var).cloned().collect());
        by_power.entry(k).or_default().add_term(rest, c.clone());
    }
    let top = by_power.keys().next_back().copied().unwrap_or(0);
    let den = r.den.clone();
    Some(
        (0..=top)
            .map(|k| match by_power.get(&k) {
                Some(p) => normalize(p.clone(), den.clone()).to_expr(),
                None => Expr::zero(),
            })
            .collect(),
    )
}

/// Whether the canonical form is a polynomial in variables and symbols only.
pub(super) fn is_polynomial(e: &Expr) -> bool {
    let r = to_rf(e);
    r.den.is_one()
        && r.num
            .0
            .keys()
            .flat_map(|m| m.0.iter())
            .all(|(a, _)| matches!(a.node(), Node::Var(_) | Node::Sym(_)))
}
