//! Coordinate-format binary mask.

use crate::error::{Error, Result};

/// Binary `L x L` attention mask as parallel `(row, col)` vectors, sorted
/// lexicographically with no duplicates. Row lookups must search for the
/// row's limits; [`CooMask::neighbors`] binary-searches the sorted rows
/// vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooMask {
    len: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl CooMask {
    pub fn new(len: usize, rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidMask("mask length must be >= 1".into()));
        }
        if rows.len() != cols.len() {
            return Err(Error::InvalidMask(format!(
                "rows length {} != cols length {}",
                rows.len(),
                cols.len()
            )));
        }
        if rows.iter().any(|&i| i >= len) || cols.iter().any(|&j| j >= len) {
            return Err(Error::InvalidMask(format!(
                "coordinate out of range [0, {len})"
            )));
        }
        for w in 0..rows.len().saturating_sub(1) {
            let a = (rows[w], cols[w]);
            let b = (rows[w + 1], cols[w + 1]);
            if a >= b {
                return Err(Error::InvalidMask(format!(
                    "entries must be sorted by (row, col) without duplicates; ({}, {}) then ({}, {})",
                    a.0, a.1, b.0, b.1
                )));
            }
        }
        Ok(Self { len, rows, cols })
    }

    pub fn empty(len: usize) -> Result<Self> {
        Self::new(len, Vec::new(), Vec::new())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    #[inline]
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Ascending column indices of row `i`. The row's span is located by
    /// binary search over the sorted rows vector.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        if i >= self.len {
            return Err(Error::RowOutOfRange {
                row: i,
                len: self.len,
            });
        }
        Ok(self.row_span(i))
    }

    #[inline]
    pub(crate) fn row_span(&self, i: usize) -> &[usize] {
        let lo = self.rows.partition_point(|&r| r < i);
        let hi = self.rows.partition_point(|&r| r <= i);
        &self.cols[lo..hi]
    }

    /// Fraction of nonzero entries, `nnz / L^2`.
    pub fn sparsity_factor(&self) -> f64 {
        self.nnz() as f64 / (self.len as f64 * self.len as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_sorting_and_duplicates() {
        assert!(CooMask::new(3, vec![1, 0], vec![0, 0]).is_err());
        assert!(CooMask::new(3, vec![0, 0], vec![1, 0]).is_err());
        assert!(CooMask::new(3, vec![0, 0], vec![1, 1]).is_err());
    }

    #[test]
    fn validates_range_and_lengths() {
        assert!(CooMask::new(2, vec![0], vec![2]).is_err());
        assert!(CooMask::new(2, vec![2], vec![0]).is_err());
        assert!(CooMask::new(2, vec![0, 1], vec![0]).is_err());
        assert!(CooMask::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn row_span_by_binary_search() {
        let m = CooMask::new(4, vec![0, 2, 2, 2], vec![3, 0, 1, 3]).unwrap();
        assert_eq!(m.neighbors(0).unwrap(), &[3]);
        assert_eq!(m.neighbors(1).unwrap(), &[] as &[usize]);
        assert_eq!(m.neighbors(2).unwrap(), &[0, 1, 3]);
        assert!(m.neighbors(4).is_err());
    }
}
