mod common;

use common::random_poly;
use opfactor::conditions::{check_candidate, CheckOptions, FactorizationCandidate, Operator};
use opfactor::expr::{Expr, VarId};
use opfactor::factor::{
    factor_constant, factor_ode, factor_pde_second_order, solve_riccati_ansatz, RiccatiProblem, SearchConfig,
};
use opfactor::operator::{DiffOperator, Linearity};
use opfactor::Rational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SYMBOLIC: CheckOptions = CheckOptions { samples: 0, tol: 1e-9, seed: 0, test_degree: 4 };

fn first(n: usize, lead: &[Expr], zeroth: Expr) -> DiffOperator {
    let mut terms: Vec<(usize, usize, Expr)> = lead.iter().enumerate().map(|(h, c)| (1, h + 1, c.clone())).collect();
    terms.push((0, 1, zeroth));
    DiffOperator::from_terms(n, 1, Linearity::Linear, terms).unwrap()
}

fn scalar(op: Operator) -> DiffOperator {
    match op {
        Operator::Scalar(o) => o,
        Operator::Matrix(_) => unreachable!("scalar product"),
    }
}

fn passes(op: &DiffOperator, c: &FactorizationCandidate) -> bool {
    check_candidate(&op.clone().into(), c, &SYMBOLIC).unwrap().passed()
}

fn bump_g01(op: &DiffOperator) -> DiffOperator {
    let mut p = op.clone();
    p.add(opfactor::jet::DerivIndex::identity(1), Expr::one()).unwrap();
    p
}

/// `(b111 D + b101)(D + b201)` with polynomial coefficients of degree <= 2.
fn ode_plant(seed: u64) -> (FactorizationCandidate, Expr) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = [VarId::x(1)];
    let b111 = random_poly(&mut rng, &x, 2);
    let b101 = random_poly(&mut rng, &x, 2);
    let b201 = random_poly(&mut rng, &x, 2);
    let cand = FactorizationCandidate::Scalar(vec![first(1, &[b111], b101), first(1, &[Expr::one()], b201.clone())]);
    (cand, b201)
}

#[test]
fn riccati_recovers_planted_factorizations() {
    let cfg = SearchConfig::default();
    let mut factorable_after_bump = Vec::new();
    for seed in 0..50 {
        let (cand, _) = ode_plant(seed);
        let p = scalar(cand.product().unwrap());
        let prob = RiccatiProblem::new(&p).unwrap();
        let ys = solve_riccati_ansatz(&prob, &cfg).unwrap();
        assert!(!ys.is_empty(), "seed {seed}: {p}");
        for y in &ys {
            assert!(passes(&p, &prob.candidate(y).unwrap()), "seed {seed}: Y = {y}");
        }
        // The bump usually destroys the factorization; when it does not,
        // every returned Y must still be a genuine factorization.
        let q = bump_g01(&p);
        let prob = RiccatiProblem::new(&q).unwrap();
        let ys = solve_riccati_ansatz(&prob, &cfg).unwrap();
        for y in &ys {
            assert!(passes(&q, &prob.candidate(y).unwrap()), "seed {seed}: perturbed, Y = {y}");
        }
        if !ys.is_empty() {
            factorable_after_bump.push(seed);
        }
    }
    println!("perturbed plants that still factor: {factorable_after_bump:?}");
    assert!(factorable_after_bump.len() <= 5, "{factorable_after_bump:?}");
}

fn rational() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn riccati_residual_matches_conditions(seed in any::<u64>(), wrong in any::<bool>()) {
        let (cand, b201) = ode_plant(seed);
        let p = scalar(cand.product().unwrap());
        let prob = RiccatiProblem::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let y = if wrong { (b201 + random_poly(&mut rng, &[VarId::x(1)], 1)).simplify() } else { b201 };
        let solves = prob.residual(&y).is_zero();
        let report = check_candidate(&p.clone().into(), &prob.candidate(&y).unwrap(), &SYMBOLIC).unwrap();
        let (zero, total) = report.condition_tally().unwrap();
        prop_assert_eq!(solves, zero == total);
        prop_assert_eq!(solves, report.passed());
    }

    #[test]
    fn constant_roots_recovered(r1 in rational(), r2 in rational()) {
        let one = Expr::one();
        let cand = FactorizationCandidate::Scalar(vec![
            first(1, &[one.clone()], Expr::constant(-r1.clone())),
            first(1, &[one], Expr::constant(-r2.clone())),
        ]);
        let p = scalar(cand.product().unwrap());
        let cs = factor_constant(&p, &SearchConfig::default()).unwrap();
        let mut got: Vec<Rational> = cs
            .iter()
            .map(|c| -c.coefficient(2, 1, 1, 0, 1).as_const().expect("rational root").clone())
            .collect();
        got.sort();
        let mut want = vec![r1, r2];
        want.sort();
        want.dedup();
        prop_assert_eq!(got, want);
        for c in &cs {
            prop_assert!(passes(&p, c));
        }
    }

    #[test]
    fn gauge_rescaling_keeps_candidates(seed in 0u64..1000, c in rational()) {
        prop_assume!(c != Rational::from_integer(0.into()));
        let (cand, _) = ode_plant(seed);
        let p = scalar(cand.product().unwrap());
        let k = Expr::constant(c);
        for found in factor_ode(&p, &SearchConfig::default()).unwrap() {
            let FactorizationCandidate::Scalar(fs) = &found else { unreachable!() };
            let q1 = fs[0].map_coeffs(&|e| (e * &k).simplify()).unwrap();
            let q2 = fs[1].map_coeffs(&|e| (e / &k).simplify()).unwrap();
            prop_assert!(passes(&p, &FactorizationCandidate::Scalar(vec![q1, q2])));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 30, ..ProptestConfig::default() })]

    #[test]
    fn pde_pipeline_closes_on_plants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = [VarId::x(1), VarId::x(2)];
        let mut poly = |d| random_poly(&mut rng, &x, d);
        let q1 = first(2, &[poly(1), poly(1)], poly(1));
        let q2 = first(2, &[poly(0), poly(1)], poly(1));
        let cand = FactorizationCandidate::Scalar(vec![q1, q2]);
        let p = scalar(cand.product().unwrap());
        let r = factor_pde_second_order(&p, &SearchConfig::default()).unwrap();
        prop_assume!(!r.delta.is_zero());
        prop_assert!(!r.successes().is_empty(), "{}", p);
        for b in r.successes() {
            prop_assert!(passes(&p, &b.candidate));
        }
    }
}
