//! Lossless bridges between mask formats.

use crate::error::{Error, Result};
use crate::mask::{CooMask, CsrMask};

impl CooMask {
    /// Convert to CSR. Round-trips with [`CsrMask::to_coo`] exactly.
    pub fn to_csr(&self) -> CsrMask {
        let len = self.len();
        let mut offsets = Vec::with_capacity(len + 1);
        offsets.push(0usize);
        let rows = self.rows();
        let mut cursor = 0usize;
        for i in 0..len {
            while cursor < rows.len() && rows[cursor] == i {
                cursor += 1;
            }
            offsets.push(cursor);
        }
        CsrMask::new(len, offsets, self.cols().to_vec())
            .expect("a valid COO mask converts to a valid CSR mask")
    }
}

impl CsrMask {
    /// Convert to COO. Round-trips with [`CooMask::to_csr`] exactly.
    pub fn to_coo(&self) -> CooMask {
        let len = self.len();
        let mut rows = Vec::with_capacity(self.nnz());
        for i in 0..len {
            rows.extend(std::iter::repeat_n(
                i,
                self.neighbors(i).expect("in range").len(),
            ));
        }
        CooMask::new(len, rows, self.cols().to_vec())
            .expect("a valid CSR mask converts to a valid COO mask")
    }
}

/// Build a CSR mask from a square 0-1 grid.
pub fn dense_to_csr(grid: &[Vec<u8>]) -> Result<CsrMask> {
    let len = grid.len();
    if len == 0 {
        return Err(Error::InvalidMask("grid must be non-empty".into()));
    }
    let mut offsets = Vec::with_capacity(len + 1);
    offsets.push(0usize);
    let mut cols = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        if row.len() != len {
            return Err(Error::InvalidMask(format!(
                "grid row {i} has {} entries, expected {len}",
                row.len()
            )));
        }
        for (j, &cell) in row.iter().enumerate() {
            match cell {
                0 => {}
                1 => cols.push(j),
                other => {
                    return Err(Error::InvalidMask(format!(
                        "grid entry ({i}, {j}) is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        offsets.push(cols.len());
    }
    CsrMask::new(len, offsets, cols)
}

/// Expand a CSR mask to a square 0-1 grid.
pub fn csr_to_dense(mask: &CsrMask) -> Vec<Vec<u8>> {
    let len = mask.len();
    let mut grid = vec![vec![0u8; len]; len];
    for (i, row) in grid.iter_mut().enumerate() {
        for &j in mask.neighbors(i).expect("in range") {
            row[j] = 1;
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_to_csr_by_definition() {
        let coo = CooMask::new(2, vec![0, 1, 1], vec![1, 0, 1]).unwrap();
        let csr = coo.to_csr();
        assert_eq!(csr.offsets(), &[0, 1, 3]);
        assert_eq!(csr.cols(), &[1, 0, 1]);
    }

    #[test]
    fn dense_identity_to_csr() {
        let grid = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let csr = dense_to_csr(&grid).unwrap();
        assert_eq!(csr.offsets(), &[0, 1, 2, 3]);
        assert_eq!(csr.cols(), &[0, 1, 2]);
        assert_eq!(csr_to_dense(&csr), grid);
    }

    #[test]
    fn dense_rejects_non_binary_and_ragged() {
        assert!(dense_to_csr(&[vec![2]]).is_err());
        assert!(dense_to_csr(&[vec![0, 1], vec![0]]).is_err());
        assert!(dense_to_csr(&[]).is_err());
    }
}
