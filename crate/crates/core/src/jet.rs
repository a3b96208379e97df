//! Slot-indexed derivative calculus.
//!
//! A derivative of order `k` in `n` independent variables is named by a slot
//! `h` in `1..=n^k`. Slot `h` encodes the ordered sequence of axes along which
//! the derivative is taken: the base-`n` digits of `h - 1`, most significant
//! first, each digit plus one giving an axis. The first axis of the sequence
//! is applied first (it is the innermost derivative), so prepending an outer
//! derivative along axis `i` appends `i` to the sequence:
//!
//! ```text
//! D(1,i) D(k,h) = D(k + 1, n (h - 1) + i)
//! ```
//!
//! Mixed partials commute for the smooth functions we work with, so slots
//! whose axis sequences are permutations of each other denote the same
//! value. [`MultiIndex`] is the unordered view used to merge them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("slot count {n}^{k} does not fit in a machine word")]
    CapacityExceeded { n: usize, k: usize },
    #[error("invalid derivative index (k={k}, h={h}) for n={n}")]
    InvalidIndex { n: usize, k: usize, h: usize },
    #[error("axis {axis} out of range 1..={n}")]
    InvalidAxis { n: usize, axis: usize },
    #[error("number of independent variables must be positive")]
    ZeroDimension,
}

/// Number of ordered `k`-th order derivatives in `n` variables, `n^k`.
pub fn slot_count(n: usize, k: usize) -> Result<usize, JetError> {
    if n == 0 {
        return Err(JetError::ZeroDimension);
    }
    let exp = u32::try_from(k).map_err(|_| JetError::CapacityExceeded { n, k })?;
    n.checked_pow(exp).ok_or(JetError::CapacityExceeded { n, k })
}

/// Length of the jet tuple `u^(s)`: `m (1 + n + n^2 + ... + n^s)`.
pub fn jet_size(n: usize, m: usize, s: usize) -> Result<usize, JetError> {
    if m == 0 {
        return Err(JetError::ZeroDimension);
    }
    let mut per_component: usize = 0;
    for k in 0..=s {
        per_component = per_component
            .checked_add(slot_count(n, k)?)
            .ok_or(JetError::CapacityExceeded { n, k })?;
    }
    per_component
        .checked_mul(m)
        .ok_or(JetError::CapacityExceeded { n, k: s })
}

/// The pair `(k, h)` naming slot `h` of the order-`k` derivatives, together
/// with the ambient variable count `n` it is valid for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivIndex {
    // field order matters for the derived ordering: by order, then slot
    order: usize,
    slot: usize,
    n: usize,
}

impl DerivIndex {
    pub fn new(n: usize, order: usize, slot: usize) -> Result<Self, JetError> {
        let p = slot_count(n, order)?;
        if slot == 0 || slot > p {
            return Err(JetError::InvalidIndex { n, k: order, h: slot });
        }
        Ok(DerivIndex { order, slot, n })
    }

    /// The order-zero index `(0, 1)`, i.e. the function itself.
    pub fn identity(n: usize) -> Self {
        DerivIndex { order: 0, slot: 1, n: n.max(1) }
    }

    /// First-order derivative along `axis` (1-based).
    pub fn first(n: usize, axis: usize) -> Result<Self, JetError> {
        if axis == 0 || axis > n {
            return Err(JetError::InvalidAxis { n, axis });
        }
        Ok(DerivIndex { order: 1, slot: axis, n })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        self.order == 0
    }

    /// Apply one more derivative along `outer_axis` on the outside.
    pub fn compose(&self, outer_axis: usize) -> Result<Self, JetError> {
        compose_index(outer_axis, *self)
    }

    pub fn axes(&self) -> Vec<usize> {
        index_to_axes(*self)
    }

    pub fn multi_index(&self) -> MultiIndex {
        index_to_multiindex(*self)
    }

    /// The smallest slot with the same multi-index: the representative used
    /// when Schwarz-equal slots are merged.
    pub fn canonical(&self) -> Self {
        let mut axes = self.axes();
        axes.sort_unstable();
        axes_to_index(self.n, &axes).expect("sorted axes of a valid index are valid")
    }

    /// Every valid index of order `k` for `n` variables, by increasing slot.
    pub fn all_of_order(n: usize, k: usize) -> Result<Vec<Self>, JetError> {
        let p = slot_count(n, k)?;
        Ok((1..=p).map(|slot| DerivIndex { order: k, slot, n }).collect())
    }
}

impl fmt::Display for DerivIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.order, self.slot)
    }
}

/// `D(1, outer_axis) D(k', h') = D(k' + 1, n (h' - 1) + outer_axis)`.
pub fn compose_index(outer_axis: usize, inner: DerivIndex) -> Result<DerivIndex, JetError> {
    let n = inner.n;
    if outer_axis == 0 || outer_axis > n {
        return Err(JetError::InvalidAxis { n, axis: outer_axis });
    }
    let order = inner.order + 1;
    let slot = (inner.slot - 1)
        .checked_mul(n)
        .and_then(|s| s.checked_add(outer_axis))
        .ok_or(JetError::CapacityExceeded { n, k: order })?;
    slot_count(n, order)?;
    Ok(DerivIndex { order, slot, n })
}

/// Axis sequence of an index, innermost derivative first.
pub fn index_to_axes(d: DerivIndex) -> Vec<usize> {
    let mut digits = vec![0usize; d.order];
    let mut rest = d.slot - 1;
    for digit in digits.iter_mut().rev() {
        *digit = rest % d.n + 1;
        rest /= d.n;
    }
    digits
}

/// Inverse of [`index_to_axes`].
pub fn axes_to_index(n: usize, axes: &[usize]) -> Result<DerivIndex, JetError> {
    if n == 0 {
        return Err(JetError::ZeroDimension);
    }
    let mut d = DerivIndex::identity(n);
    for &axis in axes {
        d = compose_index(axis, d)?;
    }
    Ok(d)
}

/// Unordered derivative counts `(c_1, ..., c_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    counts: Vec<usize>,
}

impl MultiIndex {
    pub fn new(counts: Vec<usize>) -> Self {
        MultiIndex { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn order(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Smallest slot carrying this multi-index.
    pub fn to_index(&self) -> Result<DerivIndex, JetError> {
        let axes: Vec<usize> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat(i + 1).take(c))
            .collect();
        axes_to_index(self.counts.len(), &axes)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn index_to_multiindex(d: DerivIndex) -> MultiIndex {
    let mut counts = vec![0usize; d.n];
    for axis in index_to_axes(d) {
        counts[axis - 1] += 1;
    }
    MultiIndex { counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: usize, k: usize, h: usize) -> DerivIndex {
        DerivIndex::new(n, k, h).unwrap()
    }

    // all length-k sequences over 1..=n, in lexicographic order
    fn sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (1..=n).map(move |a| {
                        let mut t = s.clone();
                        t.push(a);
                        t
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn slot_count_examples() {
        assert_eq!(slot_count(2, 2).unwrap(), sequences(2, 2).len());
        assert_eq!(slot_count(2, 2).unwrap(), 4);
        assert_eq!(slot_count(1, 5).unwrap(), 1);
        assert_eq!(slot_count(3, 2).unwrap(), 9);
        assert!(matches!(slot_count(2, 200), Err(JetError::CapacityExceeded { .. })));
        assert!(matches!(slot_count(0, 1), Err(JetError::ZeroDimension)));
    }

    #[test]
    fn slot_count_matches_enumeration() {
        for n in 1..=4 {
            for k in 0..=5 {
                assert_eq!(slot_count(n, k).unwrap(), sequences(n, k).len());
            }
        }
    }

    #[test]
    fn jet_size_examples() {
        assert_eq!(jet_size(2, 1, 2).unwrap(), 7);
        assert_eq!(jet_size(1, 1, 0).unwrap(), 1);
        assert_eq!(jet_size(2, 3, 1).unwrap(), 9);
        // enumerate the jet variables directly
        let count: usize = (0..=2).map(|k| sequences(2, k).len()).sum();
        assert_eq!(jet_size(2, 1, 2).unwrap(), count);
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_index(2, idx(2, 1, 1)).unwrap(), idx(2, 2, 2));
        assert_eq!(compose_index(1, DerivIndex::identity(2)).unwrap(), idx(2, 1, 1));
        assert_eq!(compose_index(3, idx(3, 1, 2)).unwrap(), idx(3, 2, 6));
        assert!(compose_index(3, idx(2, 1, 1)).is_err());
    }

    #[test]
    fn axes_examples() {
        assert_eq!(index_to_axes(idx(2, 2, 2)), vec![1, 2]);
        assert_eq!(index_to_axes(DerivIndex::identity(3)), Vec::<usize>::new());
        assert_eq!(index_to_axes(idx(2, 2, 4)), vec![2, 2]);
    }

    #[test]
    fn multiindex_examples() {
        assert_eq!(index_to_multiindex(idx(2, 2, 2)).counts(), &[1, 1]);
        assert_eq!(index_to_multiindex(idx(2, 2, 3)).counts(), &[1, 1]);
        assert_eq!(index_to_multiindex(idx(2, 2, 1)).counts(), &[2, 0]);
        assert_eq!(idx(2, 2, 3).canonical(), idx(2, 2, 2));
        assert_eq!(MultiIndex::new(vec![1, 1]).to_index().unwrap(), idx(2, 2, 2));
    }

    #[test]
    fn invalid_indices_rejected() {
        assert!(DerivIndex::new(2, 2, 5).is_err());
        assert!(DerivIndex::new(2, 2, 0).is_err());
        assert!(DerivIndex::new(2, 0, 2).is_err());
        assert!(DerivIndex::first(2, 3).is_err());
    }

    #[test]
    fn slots_follow_the_recursive_tuple_construction() {
        // u_(k+1) is built by differentiating each entry of u_(k) along
        // x1..xn in turn; slot h of that tuple must carry the same axes.
        for n in 1..=3 {
            let mut tuple: Vec<Vec<usize>> = vec![vec![]];
            for k in 1..=4 {
                tuple = tuple
                    .iter()
                    .flat_map(|axes| {
                        (1..=n).map(move |i| {
                            let mut t = axes.clone();
                            t.push(i);
                            t
                        })
                    })
                    .collect();
                for (h0, axes) in tuple.iter().enumerate() {
                    assert_eq!(&index_to_axes(idx(n, k, h0 + 1)), axes);
                }
            }
        }
    }
}
