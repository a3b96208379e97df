use opfactor::cascade::{cascade_ode, CascadeOptions, CascadeSolution, Provenance, SolutionForm};
use opfactor::conditions::FactorizationCandidate;
use opfactor::expr::{Expr, VarId};
use opfactor::factor::{factor_constant, factor_ode, SearchConfig};
use opfactor::operator::{DiffOperator, Linearity};
use proptest::prelude::*;

fn constant_op(a: i64, r1: i64, r2: i64) -> DiffOperator {
    let terms = [(2, 1, Expr::int(a)), (1, 1, Expr::int(-a * (r1 + r2))), (0, 1, Expr::int(a * r1 * r2))];
    DiffOperator::from_terms(1, 1, Linearity::Linear, terms).unwrap()
}

fn closed(s: &CascadeSolution, name: &str) -> Expr {
    match &s.get(name).unwrap().form {
        SolutionForm::Closed(e) => e.clone(),
        SolutionForm::Sampled(_) => panic!("{name} is sampled"),
    }
}

fn wronskian(u: &Expr, v: &Expr) -> Expr {
    let x = VarId::x(1);
    (u * v.diff(x) - u.diff(x) * v).simplify()
}

fn cascade_all(op: &DiffOperator) -> Vec<CascadeSolution> {
    let cands = factor_ode(op, &SearchConfig::default()).unwrap();
    assert!(!cands.is_empty());
    cands.iter().map(|c| cascade_ode(c, &CascadeOptions::default()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn constant_cascades_are_exact(a in 1i64..4, r1 in -3i64..4, r2 in -3i64..4) {
        for s in cascade_all(&constant_op(a, r1, r2)) {
            for sol in &s.solutions {
                prop_assert_eq!(sol.provenance, Provenance::ClosedForm);
                prop_assert!(sol.residual.exact(), "{}: {:?}", sol.name, sol.residual.symbolic);
            }
            let w = wronskian(&closed(&s, "u0"), &closed(&s, "u1"));
            prop_assert!(!w.is_identically_zero(), "u0 and u1 are dependent");
        }
    }
}

#[test]
fn every_constant_candidate_cascades() {
    let cands = factor_constant(&constant_op(1, 1, 2), &SearchConfig::default()).unwrap();
    assert_eq!(cands.len(), 2);
    let u0s: Vec<Expr> = cands
        .iter()
        .map(|c| closed(&cascade_ode(c, &CascadeOptions::default()).unwrap(), "u0"))
        .collect();
    assert_eq!(u0s, vec![Expr::exp(Expr::int(2) * Expr::x(1)).simplify(), Expr::exp(Expr::x(1))]);
}

#[test]
fn variable_coefficient_cascade() {
    // u'' - (x^2 + 1) u = (D + x)(D - x)
    let x = Expr::x(1);
    let g0 = -(&x * &x + Expr::one());
    let op = DiffOperator::from_terms(1, 1, Linearity::Linear, [(2, 1, Expr::one()), (0, 1, g0.simplify())]).unwrap();
    let all = cascade_all(&op);
    assert_eq!(all.len(), 1);
    for s in all {
        assert_eq!(closed(&s, "u0"), Expr::exp((&x * &x / Expr::int(2)).simplify()));
        let u0 = s.get("u0").unwrap();
        assert!(u0.residual.exact());
        // u1 needs the error function, so it is sampled
        let u1 = s.get("u1").unwrap();
        assert_eq!(u1.provenance, Provenance::Quadrature);
        assert!(u1.residual.max_relative < 1e-5, "{}", u1.residual.max_relative);
    }
}

#[test]
fn candidates_from_factor_ode_are_accepted() {
    let cand = &factor_ode(&constant_op(2, -1, 3), &SearchConfig::default()).unwrap()[0];
    assert!(matches!(cand, FactorizationCandidate::Scalar(fs) if fs.len() == 2));
}
