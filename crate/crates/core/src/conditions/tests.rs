use super::*;
use crate::expr::parse_expr;

fn e(s: &str) -> Expr {
    parse_expr(s).unwrap().simplify()
}

fn scalar(n: usize, lin: Linearity, terms: &[(usize, usize, &str)]) -> DiffOperator {
    DiffOperator::from_terms(n, 1, lin, terms.iter().map(|&(k, h, c)| (k, h, e(c)))).unwrap()
}

fn sym(name: &str, ix: &[usize], args: &[VarId]) -> Expr {
    Expr::sym(Symbol::new(name, ix.to_vec(), args.to_vec()))
}

#[test]
fn equation_counts() {
    let expected = [3, 6, 4, 9, 10, 18, 18, 30];
    for (t, want) in Template::ALL.into_iter().zip(expected) {
        let m = if t.shape == Shape::Scalar { 1 } else { 2 };
        let sys = derive_conditions(t, t.n(), m).unwrap();
        assert_eq!(sys.len(), want, "{t}\n{sys}");
    }
}

#[test]
fn linear_ode_by_hand() {
    let x = [VarId::x(1)];
    let b = |i, k, h| sym("b", &[i, k, h], &x);
    let dx = |s: Expr| s.diff(VarId::x(1));
    let want = [
        (sym("g", &[2, 1], &x), b(1, 1, 1) * b(2, 1, 1)),
        (sym("g", &[1, 1], &x), b(1, 0, 1) * b(2, 1, 1) + b(1, 1, 1) * b(2, 0, 1) + b(1, 1, 1) * dx(b(2, 1, 1))),
        (sym("g", &[0, 1], &x), b(1, 0, 1) * b(2, 0, 1) + b(1, 1, 1) * dx(b(2, 0, 1))),
    ];
    let t = Template::new(Linearity::Linear, Shape::Scalar, Domain::Ode);
    let sys = derive_conditions(t, 1, 1).unwrap();
    for (c, (lhs, rhs)) in sys.equations().iter().zip(want) {
        assert_eq!(c.lhs, lhs);
        assert_eq!(c.rhs, rhs.simplify());
    }
}

#[test]
fn nonlinear_ode_zero_condition() {
    let t = Template::new(Linearity::QuasiLinear, Shape::Scalar, Domain::Ode);
    let sys = derive_conditions(t, 1, 1).unwrap();
    let args = [VarId::x(1), VarId::u(1)];
    let zero: Vec<_> = sys.equations().iter().filter(|c| c.is_zero_condition()).collect();
    assert_eq!(zero.len(), 1);
    let want = sym("b", &[1, 1, 1], &args) * sym("b", &[2, 1, 1], &args).diff(VarId::u(1));
    assert_eq!(zero[0].rhs, want.simplify());
    assert_eq!(sys.lhs_symbols().len(), 3);
}

#[test]
fn mixed_slots_share_one_lhs() {
    let t = Template::new(Linearity::Linear, Shape::Scalar, Domain::Pde2);
    let sys = derive_conditions(t, 2, 1).unwrap();
    let x = [VarId::x(1), VarId::x(2)];
    let mixed = sym("g", &[2, 2], &x) + sym("g", &[2, 3], &x);
    assert!(sys.equations().iter().any(|c| c.lhs == mixed.simplify()));
    // each of the seven g symbols sits on exactly one left side
    let mut seen = Vec::new();
    for c in sys.equations() {
        seen.extend(c.lhs.symbols());
    }
    let n = seen.len();
    seen.sort();
    seen.dedup();
    assert_eq!((n, seen.len()), (7, 7));
}

#[test]
fn unsupported_shapes() {
    let t = Template::new(Linearity::Linear, Shape::Scalar, Domain::Ode);
    assert!(matches!(derive_conditions(t, 2, 1), Err(ConditionsError::UnsupportedTemplate(_))));
    assert!(matches!(derive_conditions(t, 1, 2), Err(ConditionsError::UnsupportedTemplate(_))));
    for t in Template::ALL {
        assert_eq!(Template::from_name(&t.name()), Some(t));
    }
}

#[test]
fn matrix_with_one_component_is_scalar() {
    for (ts, tm) in Template::ALL[..4].iter().zip(&Template::ALL[4..]) {
        let s = derive_conditions(*ts, ts.n(), 1).unwrap();
        let mtx = derive_conditions(*tm, tm.n(), 1).unwrap();
        let rename = |x: &Expr| {
            x.subst_symbols(&|s: &Symbol| {
                let ix = s.indices();
                match s.name() {
                    "f" => Some(Expr::sym(Symbol::new("g", ix[2..].to_vec(), s.args().to_vec()))),
                    "a" => Some(Expr::sym(Symbol::new("b", vec![ix[0], ix[3], ix[4]], s.args().to_vec()))),
                    _ => None,
                }
            })
            .simplify()
        };
        let (sg, sz): (Vec<_>, Vec<_>) = s.equations().iter().partition(|c| !c.is_zero_condition());
        let (mg, mz): (Vec<_>, Vec<_>) = mtx.equations().iter().partition(|c| !c.is_zero_condition());
        assert_eq!(sg.len(), mg.len());
        for (a, b) in sg.iter().zip(&mg) {
            assert_eq!(a.lhs, rename(&b.lhs));
            assert_eq!(a.rhs, rename(&b.rhs));
        }
        // Zero conditions: the scalar ones are products of factor
        // coefficients with u-partials, the matrix ones those partials alone.
        let scalar_atoms: BTreeSet<Symbol> =
            sz.iter().flat_map(|c| c.rhs.symbols()).filter(|s| !s.derivs().is_empty()).collect();
        let matrix_atoms: BTreeSet<Symbol> = mz.iter().flat_map(|c| rename(&c.rhs).symbols()).collect();
        assert_eq!(scalar_atoms, matrix_atoms, "{ts}");
    }
}

#[test]
fn check_constant_factorization() {
    let p = scalar(1, Linearity::Linear, &[(2, 1, "1"), (1, 1, "-3"), (0, 1, "2")]);
    let cand = FactorizationCandidate::Scalar(vec![
        scalar(1, Linearity::Linear, &[(1, 1, "1"), (0, 1, "-1")]),
        scalar(1, Linearity::Linear, &[(1, 1, "1"), (0, 1, "-2")]),
    ]);
    let r = check_candidate(&p.into(), &cand, &CheckOptions::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.condition_tally(), Some((3, 3)));
    let num = r.numeric.unwrap();
    assert!(num.within_tol && num.points == 8, "{num:?}");
}

#[test]
fn check_quasilinear_candidate() {
    let p = scalar(1, Linearity::QuasiLinear, &[(2, 1, "1"), (1, 1, "u")]);
    let cand = FactorizationCandidate::Scalar(vec![
        scalar(1, Linearity::Linear, &[(1, 1, "1")]),
        scalar(1, Linearity::QuasiLinear, &[(1, 1, "1"), (0, 1, "u/2")]),
    ]);
    let r = check_candidate(&p.into(), &cand, &CheckOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.terms);
    assert_eq!(r.template.map(|t| t.name()), Some("nonlinear-ode".to_string()));
    assert_eq!(r.condition_tally(), Some((4, 4)));
    assert!(r.numeric.unwrap().within_tol);
}

#[test]
fn check_reports_failing_term() {
    let p = scalar(1, Linearity::Linear, &[(2, 1, "1"), (0, 1, "1")]);
    let cand = FactorizationCandidate::Scalar(vec![
        scalar(1, Linearity::Linear, &[(1, 1, "1"), (0, 1, "-1")]),
        scalar(1, Linearity::Linear, &[(1, 1, "1"), (0, 1, "1")]),
    ]);
    let r = check_candidate(&p.into(), &cand, &CheckOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.terms.len(), 1);
    assert_eq!(r.terms[0].monomial, JetMonomialExt::slot(1));
    assert_eq!(r.terms[0].residual, Expr::int(2));
    let conds = r.conditions.unwrap();
    assert_eq!(conds.iter().filter(|c| !c.is_zero()).count(), 1);
    assert_eq!(conds[2].residual, Expr::int(2));
    assert!(!r.numeric.unwrap().within_tol);
}

struct JetMonomialExt;

impl JetMonomialExt {
    fn slot(q: usize) -> crate::operator::JetMonomial {
        crate::operator::JetMonomial::new(&[(VarId::u(q), 1)])
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let p = scalar(2, Linearity::Linear, &[(2, 1, "1")]);
    let cand = FactorizationCandidate::Scalar(vec![scalar(1, Linearity::Linear, &[(1, 1, "1")])]);
    assert!(matches!(
        check_candidate(&p.into(), &cand, &CheckOptions::default()),
        Err(ConditionsError::ShapeMismatch(_))
    ));
}

#[test]
fn discriminant_examples() {
    let wave = scalar(2, Linearity::Linear, &[(2, 1, "1"), (2, 4, "-1")]);
    assert_eq!(discriminant(&wave), Expr::int(4));
    let laplace = scalar(2, Linearity::Linear, &[(2, 1, "1"), (2, 4, "1")]);
    assert_eq!(discriminant(&laplace), Expr::int(-4));
    let heat = scalar(2, Linearity::Linear, &[(2, 1, "1"), (1, 2, "-1")]);
    assert_eq!(discriminant(&heat), Expr::zero());
    let split = scalar(2, Linearity::Linear, &[(2, 1, "1"), (2, 2, "x1"), (2, 3, "1")]);
    assert_eq!(discriminant(&split), e("(x1+1)^2"));
}

#[test]
fn planted_matrix_product_passes() {
    let lin = Linearity::Linear;
    let d = |terms: &[(usize, usize, &str)]| {
        DiffOperator::from_terms(1, 2, lin, terms.iter().map(|&(k, h, c)| (k, h, e(c)))).unwrap()
    };
    let n1 = MatrixOperator::new(vec![vec![d(&[(1, 1, "1"), (0, 1, "x1")]), d(&[(0, 1, "1")])], vec![
        d(&[]),
        d(&[(1, 1, "2")]),
    ]])
    .unwrap();
    let n2 = MatrixOperator::new(vec![vec![d(&[(1, 1, "1")]), d(&[])], vec![d(&[(0, 1, "x1^2")]), d(&[
        (1, 1, "1"),
        (0, 1, "3"),
    ])]])
    .unwrap();
    let cand = FactorizationCandidate::Matrix(vec![n1, n2]);
    let p = cand.product().unwrap();
    let r = check_candidate(&p, &cand, &CheckOptions::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.condition_tally(), Some((10, 10)));
    assert!(r.numeric.unwrap().within_tol);
}
