//! Single-pass (online) softmax accumulation (Milakov & Gimelshein 2018).
//!
//! Each output row carries a running maximum and a running denominator.
//! Folding in one more scored neighbor rescales what has been accumulated so
//! far and normalizes immediately, so the row is always a valid softmax
//! average of the neighbors seen so far and no exponent ever exceeds zero.

use crate::error::{Error, Result};
use crate::tensor::Element;

/// Fold one scored neighbor into a row. `max` and `denom` are the row's
/// running statistics (a fresh row is `max = -inf`, `denom = 0`, zero
/// output); `score` is the scaled query-key dot product and `value` the
/// neighbor's value vector. Returns the updated `(max, denom)` and rescales
/// `out_row` in place.
///
/// For the first neighbor the carried term is `denom * exp(-inf - score)`,
/// which IEEE arithmetic evaluates to zero, so the update degenerates to
/// copying `value` with weight one.
#[inline]
pub fn online_update<T: Element>(
    max: T,
    denom: T,
    out_row: &mut [T],
    score: T,
    value: &[T],
) -> (T, T) {
    debug_assert_eq!(out_row.len(), value.len());
    let max_new = max.max(score);
    let carried = denom * (max - max_new).exp();
    let fresh = (score - max_new).exp();
    let denom_new = carried + fresh;
    let inv = T::one() / denom_new;
    for (o, &v) in out_row.iter_mut().zip(value) {
        *o = inv * (carried * *o + fresh * v);
    }
    (max_new, denom_new)
}

/// Per-row running softmax statistics for all `L` rows: the running maxima
/// (initialized to `-inf`) and running denominators (initialized to `0`).
/// A row's denominator is zero exactly when no neighbor has been folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxState<T> {
    max: Vec<T>,
    denom: Vec<T>,
}

impl<T: Element> SoftmaxState<T> {
    /// State with no neighbors processed for any row.
    pub fn fresh(len: usize) -> Self {
        Self {
            max: vec![T::neg_infinity(); len],
            denom: vec![T::zero(); len],
        }
    }

    pub fn new(max: Vec<T>, denom: Vec<T>) -> Result<Self> {
        if max.len() != denom.len() {
            return Err(Error::InvalidState(format!(
                "max length {} != denom length {}",
                max.len(),
                denom.len()
            )));
        }
        for (i, (&m, &l)) in max.iter().zip(&denom).enumerate() {
            if l < T::zero() || l.is_nan() {
                return Err(Error::InvalidState(format!(
                    "row {i}: denominator {l} must be >= 0"
                )));
            }
            if (l == T::zero()) != (m == T::neg_infinity()) {
                return Err(Error::InvalidState(format!(
                    "row {i}: denominator is zero iff max is -inf (got max {m}, denom {l})"
                )));
            }
        }
        Ok(Self { max, denom })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.max.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.max.is_empty()
    }

    /// Running maximum per row.
    #[inline]
    pub fn maxes(&self) -> &[T] {
        &self.max
    }

    /// Running denominator per row.
    #[inline]
    pub fn denoms(&self) -> &[T] {
        &self.denom
    }

    /// True when row `i` has absorbed no neighbors.
    #[inline]
    pub fn row_is_untouched(&self, i: usize) -> bool {
        self.denom[i] == T::zero()
    }

    pub(crate) fn into_parts(self) -> (Vec<T>, Vec<T>) {
        (self.max, self.denom)
    }

    pub(crate) fn from_parts(max: Vec<T>, denom: Vec<T>) -> Self {
        Self { max, denom }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_neighbor_copies_value() {
        let mut out = vec![0.0f64; 3];
        let value = [2.0, -1.0, 0.5];
        let (m, l) = online_update(f64::NEG_INFINITY, 0.0, &mut out, 1.25, &value);
        assert_eq!(m, 1.25);
        assert_eq!(l, 1.0);
        assert_eq!(out, value);
    }

    #[test]
    fn equal_scores_average_values() {
        let mut out = vec![0.0f64; 2];
        let (m, l) = online_update(f64::NEG_INFINITY, 0.0, &mut out, 3.0, &[1.0, 0.0]);
        let (m, l) = online_update(m, l, &mut out, 3.0, &[0.0, 1.0]);
        assert_eq!(m, 3.0);
        assert!((l - 2.0).abs() < 1e-15);
        assert!((out[0] - 0.5).abs() < 1e-15);
        assert!((out[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn state_invariants_enforced() {
        assert!(SoftmaxState::new(vec![1.0f64], vec![0.0]).is_err());
        assert!(SoftmaxState::new(vec![f64::NEG_INFINITY], vec![1.0]).is_err());
        assert!(SoftmaxState::new(vec![1.0f64], vec![-1.0]).is_err());
        assert!(SoftmaxState::new(vec![1.0f64], vec![1.0, 2.0]).is_err());
        assert!(SoftmaxState::new(vec![f64::NEG_INFINITY], vec![0.0]).is_ok());
        assert!(SoftmaxState::<f32>::fresh(4).row_is_untouched(2));
    }
}
