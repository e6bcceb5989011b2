//! Compressed-sparse-row binary mask.

use crate::error::{Error, Result};

/// Binary `L x L` attention mask in CSR form: `offsets` has `L + 1` entries
/// and row `i`'s column indices are `cols[offsets[i]..offsets[i + 1]]`,
/// strictly increasing within each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrMask {
    len: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrMask {
    pub fn new(len: usize, offsets: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidMask("mask length must be >= 1".into()));
        }
        if offsets.len() != len + 1 {
            return Err(Error::InvalidMask(format!(
                "offsets length {} != L + 1 = {}",
                offsets.len(),
                len + 1
            )));
        }
        if offsets[0] != 0 {
            return Err(Error::InvalidMask("offsets[0] must be 0".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMask("offsets must be non-decreasing".into()));
        }
        if offsets[len] != cols.len() {
            return Err(Error::InvalidMask(format!(
                "offsets[L] = {} != nnz = {}",
                offsets[len],
                cols.len()
            )));
        }
        for i in 0..len {
            let row = &cols[offsets[i]..offsets[i + 1]];
            if row.iter().any(|&j| j >= len) {
                return Err(Error::InvalidMask(format!(
                    "row {i} has a column index out of range [0, {len})"
                )));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMask(format!(
                    "row {i} columns must be strictly increasing"
                )));
            }
        }
        Ok(Self { len, offsets, cols })
    }

    /// Mask with no nonzeros.
    pub fn empty(len: usize) -> Result<Self> {
        Self::new(len, vec![0; len + 1], Vec::new())
    }

    /// Build from per-row column lists (already ascending and in range).
    pub fn from_rows(len: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.len() != len {
            return Err(Error::InvalidMask(format!(
                "expected {len} rows, got {}",
                rows.len()
            )));
        }
        let mut offsets = Vec::with_capacity(len + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        for row in rows {
            cols.extend_from_slice(&row);
            offsets.push(cols.len());
        }
        Self::new(len, offsets, cols)
    }

    /// Sequence length `L`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Number of nonzeros (graph edges).
    #[inline]
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// True when the mask has no nonzeros.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    #[inline]
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Ascending column indices of row `i`, read straight from the row slice.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        if i >= self.len {
            return Err(Error::RowOutOfRange {
                row: i,
                len: self.len,
            });
        }
        Ok(self.row(i))
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Fraction of nonzero entries, `nnz / L^2`.
    pub fn sparsity_factor(&self) -> f64 {
        self.nnz() as f64 / (self.len as f64 * self.len as f64)
    }

    /// True when `(i, j)` is a nonzero.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.len && self.row(i).binary_search(&j).is_ok()
    }
}
