#![allow(dead_code)]

pub mod corpus;
pub mod printed;

use opfactor::conditions::{derive_conditions, FactorizationCandidate, Shape, Template};
use opfactor::expr::{parse_expr_with, Expr, VarId};
use opfactor::jet::DerivIndex;
use opfactor::operator::{DiffOperator, Linearity, MatrixOperator};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Mismatches between a template's generated system and its printed list,
/// compared as multisets of canonical `(lhs, rhs)` pairs.
pub fn golden_mismatches(t: Template, m: usize) -> Vec<String> {
    let sys = derive_conditions(t, t.n(), m).expect("supported template");
    let resolver = t.resolver(m);
    let parse = |s: &str| parse_expr_with(s, &resolver).unwrap_or_else(|e| panic!("{s}: {e}")).simplify();
    let mut want: Vec<(Expr, Expr)> =
        printed::printed(t, m).iter().map(|(l, r)| (parse(l), parse(r))).collect();
    let mut missing = Vec::new();
    for c in sys.equations() {
        match want.iter().position(|(l, r)| *l == c.lhs && *r == c.rhs) {
            Some(i) => {
                want.swap_remove(i);
            }
            None => missing.push(format!("generated but not printed: {}", sys.equation_text(c))),
        }
    }
    missing.extend(want.iter().map(|(l, r)| format!("printed but not generated: {l} = {r}")));
    missing
}

/// Random polynomial of total degree at most `deg` in `vars`, integer
/// coefficients in `[-3, 3]`; never the zero polynomial.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[VarId], deg: usize) -> Expr {
    let mut terms = Vec::new();
    let mut exps = vec![0usize; vars.len()];
    loop {
        if exps.iter().sum::<usize>() <= deg && rng.gen_bool(0.5) {
            let c = rng.gen_range(-3i64..=3);
            let mono = exps.iter().zip(vars).map(|(&e, v)| Expr::var(*v).pow(e as i64));
            terms.push(Expr::product(std::iter::once(Expr::int(c)).chain(mono)));
        }
        let mut i = 0;
        loop {
            if i == vars.len() {
                let p = Expr::sum(terms).simplify();
                return if p.is_zero() { Expr::int(rng.gen_range(1..=3)) } else { p };
            }
            exps[i] += 1;
            if exps[i] <= deg {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

fn xs(n: usize) -> Vec<VarId> {
    (1..=n).map(VarId::x).collect()
}

fn with_u(n: usize, us: &[usize]) -> Vec<VarId> {
    let mut v = xs(n);
    v.extend(us.iter().map(|&j| VarId::u(j)));
    v
}

fn entry(n: usize, m: usize, lin: Linearity, c0: Expr, c1: &[Expr]) -> DiffOperator {
    let mut op = DiffOperator::new(n, m, lin);
    op.set(DerivIndex::identity(n), c0).unwrap();
    for (h, c) in c1.iter().enumerate() {
        op.set(DerivIndex::new(n, 1, h + 1).unwrap(), c.clone()).unwrap();
    }
    op
}

/// Random first-order factor pair of a template whose product is again an
/// operator of the template: second-factor coefficients only depend on the
/// dependent variables the conditions allow.
pub fn random_plant(t: Template, m: usize, rng: &mut ChaCha8Rng, deg: usize) -> FactorizationCandidate {
    let n = t.n();
    let lin = t.linearity;
    let quasi = lin == Linearity::QuasiLinear;
    let all_u: Vec<usize> = if quasi { (1..=m).collect() } else { Vec::new() };
    let first_args = with_u(n, &all_u);
    match t.shape {
        Shape::Scalar => {
            let q1 = entry(
                n,
                1,
                lin,
                random_poly(rng, &first_args, deg),
                &(0..n).map(|_| random_poly(rng, &first_args, deg)).collect::<Vec<_>>(),
            );
            let zeroth = random_poly(rng, &with_u(n, &all_u), deg);
            let q2 = entry(n, 1, lin, zeroth, &(0..n).map(|_| random_poly(rng, &xs(n), deg)).collect::<Vec<_>>());
            FactorizationCandidate::Scalar(vec![q1, q2])
        }
        Shape::Matrix => {
            let mut n1 = Vec::new();
            let mut n2 = Vec::new();
            for p in 1..=m {
                let mut r1 = Vec::new();
                let mut r2 = Vec::new();
                for q in 1..=m {
                    let own: Vec<usize> = if quasi { vec![q] } else { Vec::new() };
                    let lead1: Vec<Expr> =
                        if p == q { (0..n).map(|_| random_poly(rng, &first_args, deg)).collect() } else { Vec::new() };
                    let lead2: Vec<Expr> =
                        if p == q { (0..n).map(|_| random_poly(rng, &xs(n), deg)).collect() } else { Vec::new() };
                    r1.push(entry(n, m, lin, random_poly(rng, &first_args, deg), &lead1));
                    r2.push(entry(n, m, lin, random_poly(rng, &with_u(n, &own), deg), &lead2));
                }
                n1.push(r1);
                n2.push(r2);
            }
            FactorizationCandidate::Matrix(vec![MatrixOperator::new(n1).unwrap(), MatrixOperator::new(n2).unwrap()])
        }
    }
}
