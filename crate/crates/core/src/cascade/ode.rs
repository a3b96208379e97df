use num_traits::FromPrimitive;

use super::integrate::antiderivative;
use super::{
    linspace, verify_closed, verify_sampled, CascadeError, CascadeOptions, CascadeSolution, Provenance, Solution,
    SolutionForm, Trajectory, MIN_STEPS,
};
use crate::conditions::{FactorizationCandidate, Operator};
use crate::expr::{Bindings, Expr, VarId};
use crate::operator::DiffOperator;
use crate::Rational;

/// `lead D + zeroth` of a first-order factor in one variable.
struct Factor {
    lead: Expr,
    zeroth: Expr,
    op: DiffOperator,
}

impl Factor {
    fn new(op: &DiffOperator) -> Result<Self, CascadeError> {
        if op.n() != 1 || op.m() != 1 || op.order() > 1 {
            return Err(CascadeError::NotApplicable(format!("{op} is not a first-order scalar ODE factor")));
        }
        Ok(Factor { lead: op.g(1, 1).simplify(), zeroth: op.g(0, 1).simplify(), op: op.clone() })
    }
}

fn eval_at(e: &Expr, x: f64) -> Result<f64, CascadeError> {
    Ok(e.eval(&Bindings::new().with(VarId::x(1), x))?)
}

fn check_lead(lead: &Expr, grid: &[f64]) -> Result<(), CascadeError> {
    if lead.depends_on(VarId::u(1)) {
        return Err(CascadeError::NotApplicable("leading coefficient depends on u".into()));
    }
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let v = eval_at(lead, x)?;
        if v.abs() < 1e-12 || !v.is_finite() {
            return Err(CascadeError::SingularLeadingCoefficient(x));
        }
        // a sign change between grid points hides a zero
        if let Some((px, pv)) = prev.filter(|&(_, pv)| pv.signum() != v.signum()) {
            return Err(CascadeError::SingularLeadingCoefficient(px - pv * (x - px) / (v - pv)));
        }
        prev = Some((x, v));
    }
    Ok(())
}

fn midpoint(opts: &CascadeOptions) -> Result<Expr, CascadeError> {
    let mid = (opts.interval.0 + opts.interval.1) / 2.0;
    Rational::from_f64(mid)
        .map(Expr::constant)
        .ok_or_else(|| CascadeError::NotApplicable(format!("interval midpoint {mid} is not finite")))
}

/// `exp(-int zeroth / lead)` scaled to 1 at the midpoint, if the table
/// covers the integrand.
fn closed_homogeneous(f: &Factor, mid: &Expr) -> Option<Expr> {
    let a = antiderivative(&(&f.zeroth / &f.lead))?;
    let u = a.exp_scaled(-1);
    let at_mid = u.subst(VarId::x(1), mid);
    if at_mid.is_zero() {
        return None;
    }
    Some((u / at_mid).simplify())
}

/// Sample grid for quadrature: `2 steps` intervals, with a further midpoint
/// per interval for Simpson's rule.
struct Quad {
    fine: Vec<f64>,
    quarter: Vec<f64>,
    steps: usize,
}

impl Quad {
    fn new(opts: &CascadeOptions) -> Result<Self, CascadeError> {
        if opts.steps < MIN_STEPS {
            return Err(CascadeError::StepCountTooSmall(opts.steps));
        }
        let steps = opts.steps + opts.steps % 2;
        let (a, b) = opts.interval;
        Ok(Quad { fine: linspace(a, b, 2 * steps), quarter: linspace(a, b, 4 * steps), steps })
    }

    fn coarse(&self, fine_values: &[f64]) -> Trajectory<f64> {
        Trajectory {
            grid: self.fine.iter().step_by(2).copied().collect(),
            values: fine_values.iter().step_by(2).map(|v| vec![*v]).collect(),
        }
    }

    /// `exp(-int_mid^x zeroth / lead)` on the fine grid.
    fn homogeneous(&self, f: &Factor) -> Result<Vec<f64>, CascadeError> {
        let ratio = (&f.zeroth / &f.lead).simplify();
        let g: Vec<f64> = self.quarter.iter().map(|&x| eval_at(&ratio, x)).collect::<Result<_, _>>()?;
        let h = self.fine[1] - self.fine[0];
        let mid = self.steps;
        let mut big_f = vec![0.0; self.fine.len()];
        for j in mid + 1..self.fine.len() {
            big_f[j] = big_f[j - 1] + h / 6.0 * (g[2 * j - 2] + 4.0 * g[2 * j - 1] + g[2 * j]);
        }
        for j in (0..mid).rev() {
            big_f[j] = big_f[j + 1] - h / 6.0 * (g[2 * j] + 4.0 * g[2 * j + 1] + g[2 * j + 2]);
        }
        let out: Vec<f64> = big_f.iter().map(|v| (-v).exp()).collect();
        finite(out, "homogeneous solution")
    }

    /// `u0(x) int_mid^x v1 / (lead u0)` on the coarse grid.
    fn particular(&self, lead: &Expr, u0: &[f64], v1: &[f64]) -> Result<Vec<f64>, CascadeError> {
        let g: Vec<f64> = self
            .fine
            .iter()
            .zip(u0.iter().zip(v1))
            .map(|(&x, (u, v))| Ok(v / (eval_at(lead, x)? * u)))
            .collect::<Result<_, CascadeError>>()?;
        let h = self.fine[1] - self.fine[0];
        let mid = self.steps / 2;
        let coarse = self.steps + 1;
        let mut big_g = vec![0.0; coarse];
        for i in mid + 1..coarse {
            big_g[i] = big_g[i - 1] + h / 3.0 * (g[2 * i - 2] + 4.0 * g[2 * i - 1] + g[2 * i]);
        }
        for i in (0..mid).rev() {
            big_g[i] = big_g[i + 1] - h / 3.0 * (g[2 * i] + 4.0 * g[2 * i + 1] + g[2 * i + 2]);
        }
        let out = (0..coarse).map(|i| u0[2 * i] * big_g[i]).collect();
        finite(out, "particular solution")
    }

    fn sample(&self, e: &Expr) -> Result<Vec<f64>, CascadeError> {
        self.fine.iter().map(|&x| eval_at(e, x)).collect()
    }
}

fn finite(v: Vec<f64>, what: &str) -> Result<Vec<f64>, CascadeError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(CascadeError::QuadratureFailure(format!("{what} is not finite at sample {i}"))),
        None => Ok(v),
    }
}

enum Piece {
    Closed(Expr),
    /// Values on the quadrature fine grid.
    Fine(Vec<f64>),
    /// Values on the coarse grid.
    Coarse(Vec<f64>),
}

fn solution(name: &str, piece: Piece, quad: Option<&Quad>, op: &Operator, opts: &CascadeOptions) -> Result<Solution, CascadeError> {
    let sampled = |t: Trajectory<f64>| -> Result<Solution, CascadeError> {
        let residual = verify_sampled(op, &t)?;
        Ok(Solution { name: name.into(), form: SolutionForm::Sampled(t), provenance: Provenance::Quadrature, residual })
    };
    match piece {
        Piece::Closed(e) => {
            let Operator::Scalar(o) = op else { unreachable!("scalar cascade") };
            let grid: Vec<Vec<f64>> = opts.grid().into_iter().map(|x| vec![x]).collect();
            let residual = verify_closed(o, &e, &grid)?;
            Ok(Solution { name: name.into(), form: SolutionForm::Closed(e), provenance: Provenance::ClosedForm, residual })
        }
        Piece::Fine(v) => sampled(quad.expect("quadrature grid").coarse(&v)),
        Piece::Coarse(v) => {
            let grid = quad.expect("quadrature grid").fine.iter().step_by(2).copied().collect();
            sampled(Trajectory { grid, values: v.into_iter().map(|x| vec![x]).collect() })
        }
    }
}

/// Cascade for a pair of first-order scalar ODE factors. Quasi-linear
/// candidates only get `u0`.
pub fn cascade_ode(cand: &FactorizationCandidate, opts: &CascadeOptions) -> Result<CascadeSolution, CascadeError> {
    let FactorizationCandidate::Scalar(fs) = cand else {
        return Err(CascadeError::NotApplicable("cascade_ode takes scalar factors".into()));
    };
    let [q1, q2] = fs.as_slice() else {
        return Err(CascadeError::NotApplicable(format!("expected two factors, got {}", fs.len())));
    };
    let (q1, q2) = (Factor::new(q1)?, Factor::new(q2)?);
    let p = cand.product()?;
    let grid = opts.grid();
    check_lead(&q2.lead, &grid)?;
    if q1.op.references_dependent() || q2.op.references_dependent() {
        return quasi_linear(&q2, &p, opts);
    }
    check_lead(&q1.lead, &grid)?;
    let mid = midpoint(opts)?;

    let mut quad: Option<Quad> = None;
    let mut homogeneous = |f: &Factor| -> Result<Piece, CascadeError> {
        if let Some(e) = closed_homogeneous(f, &mid) {
            return Ok(Piece::Closed(e));
        }
        if quad.is_none() {
            quad = Some(Quad::new(opts)?);
        }
        Ok(Piece::Fine(quad.as_ref().expect("just set").homogeneous(f)?))
    };
    let u0 = homogeneous(&q2)?;
    let v1 = homogeneous(&q1)?;
    let closed_u1 = match (&u0, &v1) {
        (Piece::Closed(a), Piece::Closed(b)) => {
            antiderivative(&(b / (&q2.lead * a))).map(|i| (a * i.to_expr()).simplify())
        }
        _ => None,
    };
    let u1 = match closed_u1 {
        Some(e) => Piece::Closed(e),
        None => {
            if quad.is_none() {
                quad = Some(Quad::new(opts)?);
            }
            let qd = quad.as_ref().expect("just set");
            let fine = |piece: &Piece| match piece {
                Piece::Closed(e) => qd.sample(e),
                Piece::Fine(v) | Piece::Coarse(v) => Ok(v.clone()),
            };
            Piece::Coarse(qd.particular(&q2.lead, &fine(&u0)?, &fine(&v1)?)?)
        }
    };
    let q1_op = Operator::Scalar(q1.op.clone());
    Ok(CascadeSolution {
        solutions: vec![
            solution("u0", u0, quad.as_ref(), &p, opts)?,
            solution("v1", v1, quad.as_ref(), &q1_op, opts)?,
            solution("u1", u1, quad.as_ref(), &p, opts)?,
        ],
    })
}

/// `lead u' + (alpha + beta u) u = 0`: the substitution `w = 1/u` gives
/// `w' = (alpha / lead) w + beta / lead`. With `alpha = 0` and constant
/// `k = beta / lead` this is `u = 1 / (k (x + C))`.
fn quasi_linear(q2: &Factor, p: &Operator, opts: &CascadeOptions) -> Result<CascadeSolution, CascadeError> {
    let x = VarId::x(1);
    let u = VarId::u(1);
    let c = Expr::constant(opts.constant.clone());
    let coeffs = q2.zeroth.coefficients_in(u).filter(|cs| cs.len() <= 2 && cs.iter().all(|e| !e.depends_on(u)));
    let closed = match coeffs.as_deref() {
        Some([alpha]) => {
            let linear = Factor { lead: q2.lead.clone(), zeroth: alpha.clone(), op: q2.op.clone() };
            closed_homogeneous(&linear, &midpoint(opts)?)
        }
        Some([alpha, beta]) => {
            let k = (beta / &q2.lead).simplify();
            if alpha.is_zero() && !k.depends_on(x) {
                Some((Expr::one() / (k * (Expr::x(1) + c.clone()))).simplify())
            } else {
                bernoulli(alpha, beta, &q2.lead, &c)
            }
        }
        _ => None,
    };
    let u0 = match closed {
        Some(e) => solution("u0", Piece::Closed(e), None, p, opts)?,
        None => {
            let t = rk4_scalar(q2, opts)?;
            let residual = verify_sampled(p, &t)?;
            Solution { name: "u0".into(), form: SolutionForm::Sampled(t), provenance: Provenance::Rk4, residual }
        }
    };
    Ok(CascadeSolution { solutions: vec![u0] })
}

fn bernoulli(alpha: &Expr, beta: &Expr, lead: &Expr, c: &Expr) -> Option<Expr> {
    let a = antiderivative(&(alpha / lead))?;
    let (e_pos, e_neg) = (a.exp_scaled(1), a.exp_scaled(-1));
    let i = antiderivative(&(e_neg * beta / lead))?;
    let w = (e_pos * (i.to_expr() + c)).simplify();
    (!w.is_zero()).then(|| (Expr::one() / w).simplify())
}

/// `u' = -zeroth(x, u) u / lead` from `u(a) = C`.
fn rk4_scalar(q2: &Factor, opts: &CascadeOptions) -> Result<Trajectory<f64>, CascadeError> {
    if opts.steps < MIN_STEPS {
        return Err(CascadeError::StepCountTooSmall(opts.steps));
    }
    let rhs = (-(&q2.zeroth * Expr::u(1)) / &q2.lead).simplify();
    let f = |x: f64, u: f64| -> Result<f64, CascadeError> {
        Ok(rhs.eval(&Bindings::new().with(VarId::x(1), x).with(VarId::u(1), u))?)
    };
    let (a, b) = opts.interval;
    let grid = linspace(a, b, opts.steps);
    let h = (b - a) / opts.steps as f64;
    let mut u = num_traits::ToPrimitive::to_f64(&opts.constant).unwrap_or(1.0);
    let mut values = vec![vec![u]];
    for &x in &grid[..opts.steps] {
        let k1 = f(x, u)?;
        let k2 = f(x + h / 2.0, u + h / 2.0 * k1)?;
        let k3 = f(x + h / 2.0, u + h / 2.0 * k2)?;
        let k4 = f(x + h, u + h * k3)?;
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !u.is_finite() {
            return Err(CascadeError::QuadratureFailure(format!("RK4 solution blows up near x = {x}")));
        }
        values.push(vec![u]);
    }
    Ok(Trajectory { grid, values })
}
