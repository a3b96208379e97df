use num_traits::Float;

use super::{linspace, verify_sampled, CascadeError, CascadeOptions, CascadeSolution, Provenance, Solution, SolutionForm, Trajectory, MIN_STEPS};
use crate::conditions::{FactorizationCandidate, Operator};
use crate::expr::{Bindings, Expr, VarId};
use crate::operator::MatrixOperator;

/// `E(x) u' + B(x) u` for a first-order matrix factor in one variable.
struct LinearFactor {
    e: Vec<Vec<Expr>>,
    b: Vec<Vec<Expr>>,
}

impl LinearFactor {
    fn new(n: &MatrixOperator) -> Result<Self, CascadeError> {
        if n.n() != 1 || n.order_profile().iter().flatten().any(|&k| k > 1) {
            return Err(CascadeError::NotApplicable("factors must be first order in one variable".into()));
        }
        if n.rows().iter().flatten().any(|e| e.references_dependent()) {
            return Err(CascadeError::NotApplicable("the system cascade needs linear factors".into()));
        }
        let grid = |k| n.rows().iter().map(|r| r.iter().map(|e| e.g(k, 1).simplify()).collect()).collect();
        Ok(LinearFactor { e: grid(1), b: grid(0) })
    }

    fn m(&self) -> usize {
        self.e.len()
    }

    fn at<F: Float>(&self, x: F) -> Result<(Vec<Vec<F>>, Vec<Vec<F>>), CascadeError> {
        let bind = Bindings::new().with(VarId::x(1), x);
        let ev = |g: &Vec<Vec<Expr>>| -> Result<Vec<Vec<F>>, CascadeError> {
            g.iter().map(|r| r.iter().map(|c| Ok(c.eval(&bind)?)).collect()).collect()
        };
        Ok((ev(&self.e)?, ev(&self.b)?))
    }

    /// `u' = E^-1 (r - B u)`.
    fn slope<F: Float>(&self, x: F, u: &[F], r: &[F]) -> Result<Vec<F>, CascadeError> {
        let (e, b) = self.at(x)?;
        let rhs: Vec<F> = (0..self.m())
            .map(|p| r[p] - (0..self.m()).fold(F::zero(), |acc, q| acc + b[p][q] * u[q]))
            .collect();
        solve(e, rhs).ok_or_else(|| CascadeError::SingularLeadingCoefficient(x.to_f64().unwrap_or(f64::NAN)))
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve<F: Float>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let m = b.len();
    let scale = a.iter().flatten().fold(F::zero(), |acc, v| acc.max(v.abs()));
    let eps = F::from(1e-12)? * scale.max(F::one());
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))?;
        if a[piv][col].abs() <= eps || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); m];
    for row in (0..m).rev() {
        let s = (row + 1..m).fold(b[row], |acc, k| acc - a[row][k] * x[k]);
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// State `(v, u)` with `N1 v = 0` and `N2 u = v`; `v` is dropped when
/// `n1` is `None`.
fn rk4<F: Float>(
    n1: Option<&LinearFactor>,
    n2: &LinearFactor,
    grid: &[F],
    v0: Vec<F>,
    u0: Vec<F>,
) -> Result<Vec<(Vec<F>, Vec<F>)>, CascadeError> {
    let m = n2.m();
    let zero = vec![F::zero(); m];
    let f = |x: F, v: &[F], u: &[F]| -> Result<(Vec<F>, Vec<F>), CascadeError> {
        match n1 {
            Some(n1) => Ok((n1.slope(x, v, &zero)?, n2.slope(x, u, v)?)),
            None => Ok((zero.clone(), n2.slope(x, u, &zero)?)),
        }
    };
    let axpy = |y: &[F], k: &[F], h: F| -> Vec<F> { y.iter().zip(k).map(|(a, b)| *a + h * *b).collect() };
    let two = F::one() + F::one();
    let six = two + two + two;
    let mut out = vec![(v0, u0)];
    for w in grid.windows(2) {
        let (x, h) = (w[0], w[1] - w[0]);
        let (v, u) = out.last().expect("non-empty").clone();
        let (kv1, ku1) = f(x, &v, &u)?;
        let (kv2, ku2) = f(x + h / two, &axpy(&v, &kv1, h / two), &axpy(&u, &ku1, h / two))?;
        let (kv3, ku3) = f(x + h / two, &axpy(&v, &kv2, h / two), &axpy(&u, &ku2, h / two))?;
        let (kv4, ku4) = f(x + h, &axpy(&v, &kv3, h), &axpy(&u, &ku3, h))?;
        let step = |y: &[F], k1: &[F], k2: &[F], k3: &[F], k4: &[F]| -> Vec<F> {
            (0..m).map(|i| y[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect()
        };
        out.push((step(&v, &kv1, &kv2, &kv3, &kv4), step(&u, &ku1, &ku2, &ku3, &ku4)));
    }
    Ok(out)
}

fn unit<F: Float>(m: usize, j: usize) -> Vec<F> {
    (0..m).map(|i| if i == j { F::one() } else { F::zero() }).collect()
}

/// Cascade for a pair of first-order matrix factors in one variable,
/// integrated with RK4 from identity columns at the left end of the
/// interval: `u0[j]` solves `N2 u = 0`, `v1[j]` solves `N1 v = 0`, and
/// `u1[j]` solves `N2 u = v1[j]` with `u1[j] = 0` at the left end.
pub fn cascade_system_numeric(
    cand: &FactorizationCandidate,
    interval: (f64, f64),
    opts: &CascadeOptions,
) -> Result<CascadeSolution, CascadeError> {
    let FactorizationCandidate::Matrix(fs) = cand else {
        return Err(CascadeError::NotApplicable("cascade_system_numeric takes matrix factors".into()));
    };
    let [n1, n2] = fs.as_slice() else {
        return Err(CascadeError::NotApplicable(format!("expected two factors, got {}", fs.len())));
    };
    if opts.steps < MIN_STEPS {
        return Err(CascadeError::StepCountTooSmall(opts.steps));
    }
    let (n1_op, n2_f, n1_f) = (Operator::Matrix(n1.clone()), LinearFactor::new(n2)?, LinearFactor::new(n1)?);
    let p = cand.product()?;
    let m = n2_f.m();
    let grid = linspace(interval.0, interval.1, opts.steps);
    let traj = |states: Vec<Vec<f64>>| Trajectory { grid: grid.clone(), values: states };
    let sampled = |name: String, t: Trajectory<f64>, op: &Operator| -> Result<Solution, CascadeError> {
        let residual = verify_sampled(op, &t)?;
        Ok(Solution { name, form: SolutionForm::Sampled(t), provenance: Provenance::Rk4, residual })
    };
    let (mut u0s, mut v1s, mut u1s) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..m {
        let run = rk4(None, &n2_f, &grid, vec![0.0; m], unit(m, j))?;
        u0s.push(sampled(format!("u0[{}]", j + 1), traj(run.into_iter().map(|(_, u)| u).collect()), &p)?);
        let run = rk4(Some(&n1_f), &n2_f, &grid, unit(m, j), vec![0.0; m])?;
        let (vs, us): (Vec<_>, Vec<_>) = run.into_iter().unzip();
        v1s.push(sampled(format!("v1[{}]", j + 1), traj(vs), &n1_op)?);
        u1s.push(sampled(format!("u1[{}]", j + 1), traj(us), &p)?);
    }
    let solutions = u0s.into_iter().chain(v1s).chain(u1s).collect();
    Ok(CascadeSolution { solutions })
}
