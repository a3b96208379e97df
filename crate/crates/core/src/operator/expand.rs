//! Expansion of operator products applied to a generic dependent variable.

use std::collections::HashMap;

use super::{DiffOperator, JetPolynomial, MatrixOperator, OperatorError};

/// Default bound on the derivative order an expansion may reach.
pub const DEFAULT_ORDER_CAP: usize = 6;

/// `op` applied to the jet polynomial `f`: each coefficient times the
/// matching total derivative of `f`.
pub fn apply_to_jet(op: &DiffOperator, f: &JetPolynomial, cap: usize) -> Result<JetPolynomial, OperatorError> {
    if op.n() != f.n() || op.m() != f.m() {
        return Err(OperatorError::ShapeMismatch(format!(
            "operator for (n, m) = ({}, {}) applied to a polynomial for ({}, {})",
            op.n(),
            op.m(),
            f.n(),
            f.m()
        )));
    }
    let mut cache: HashMap<Vec<usize>, JetPolynomial> = HashMap::new();
    cache.insert(Vec::new(), f.clone());
    let mut out = JetPolynomial::zero(f.n(), f.m());
    for (d, c) in op.coeffs() {
        let axes = d.axes();
        let df = derivative(&mut cache, &axes)?;
        let order = df.max_order();
        if order > cap {
            return Err(OperatorError::OrderOverflow { order, cap });
        }
        out = out.add(&df.scale(c));
    }
    Ok(out)
}

fn derivative(
    cache: &mut HashMap<Vec<usize>, JetPolynomial>,
    axes: &[usize],
) -> Result<JetPolynomial, OperatorError> {
    if let Some(p) = cache.get(axes) {
        return Ok(p.clone());
    }
    let (last, prefix) = axes.split_last().expect("empty axes are cached");
    let inner = derivative(cache, prefix)?;
    let p = inner.total_derivative(*last)?;
    cache.insert(axes.to_vec(), p.clone());
    Ok(p)
}

/// Canonical jet polynomial of `factors[0] (factors[1] (... u))` for the
/// first dependent variable.
pub fn expand_product(factors: &[DiffOperator]) -> Result<JetPolynomial, OperatorError> {
    expand_product_with_cap(factors, 1, DEFAULT_ORDER_CAP)
}

/// [`expand_product`] acting on `u^target` with an explicit order cap.
pub fn expand_product_with_cap(
    factors: &[DiffOperator],
    target: usize,
    cap: usize,
) -> Result<JetPolynomial, OperatorError> {
    let Some(last) = factors.last() else {
        return Err(OperatorError::ShapeMismatch("empty product".into()));
    };
    if target == 0 || target > last.m() {
        return Err(OperatorError::ArityMismatch(target));
    }
    let mut acc = JetPolynomial::slot(last.n(), last.m(), target);
    for op in factors.iter().rev() {
        acc = apply_to_jet(op, &acc, cap)?;
    }
    Ok(acc)
}

/// Entry `(p, q)` of the expanded product `N_1 N_2 ... N_l` acting on
/// `u^q`, as an `m x m` grid.
pub fn matrix_expand_product(factors: &[MatrixOperator]) -> Result<Vec<Vec<JetPolynomial>>, OperatorError> {
    let Some(last) = factors.last() else {
        return Err(OperatorError::ShapeMismatch("empty product".into()));
    };
    let (n, m) = (last.n(), last.m());
    if let Some(bad) = factors.iter().find(|f| f.n() != n || f.m() != m) {
        return Err(OperatorError::ShapeMismatch(format!(
            "factor for (n, m) = ({}, {}) in a product for ({n}, {m})",
            bad.n(),
            bad.m()
        )));
    }
    let mut columns = Vec::with_capacity(m);
    for q in 1..=m {
        let slot = JetPolynomial::slot(n, m, q);
        let mut col: Vec<JetPolynomial> = (1..=m)
            .map(|r| apply_to_jet(last.entry(r, q), &slot, DEFAULT_ORDER_CAP))
            .collect::<Result<_, _>>()?;
        for f in factors.iter().rev().skip(1) {
            col = (1..=m)
                .map(|p| {
                    let mut acc = JetPolynomial::zero(n, m);
                    for (r, fr) in col.iter().enumerate() {
                        acc = acc.add(&apply_to_jet(f.entry(p, r + 1), fr, DEFAULT_ORDER_CAP)?);
                    }
                    Ok(acc)
                })
                .collect::<Result<_, OperatorError>>()?;
        }
        columns.push(col);
    }
    // columns[q][p] -> grid[p][q]
    Ok((0..m).map(|p| (0..m).map(|q| columns[q][p].clone()).collect()).collect())
}
