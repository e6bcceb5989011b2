//! Mask set algebra and sparsity analytics.

use crate::error::{Error, Result};
use crate::mask::CsrMask;

/// Exact set union of two masks over the same length, required to be
/// coordinate-disjoint. Overlap is an error naming an offending coordinate,
/// since a sequential kernel pass over overlapping masks would feed the same
/// score into the softmax twice.
pub fn union_disjoint(a: &CsrMask, b: &CsrMask) -> Result<CsrMask> {
    if a.len() != b.len() {
        return Err(Error::InvalidMask(format!(
            "union requires equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let len = a.len();
    let mut offsets = Vec::with_capacity(len + 1);
    offsets.push(0usize);
    let mut cols = Vec::with_capacity(a.nnz() + b.nnz());
    for i in 0..len {
        let (ra, rb) = (a.neighbors(i)?, b.neighbors(i)?);
        let (mut x, mut y) = (0usize, 0usize);
        while x < ra.len() && y < rb.len() {
            match ra[x].cmp(&rb[y]) {
                std::cmp::Ordering::Less => {
                    cols.push(ra[x]);
                    x += 1;
                }
                std::cmp::Ordering::Greater => {
                    cols.push(rb[y]);
                    y += 1;
                }
                std::cmp::Ordering::Equal => {
                    return Err(Error::MaskOverlap { row: i, col: ra[x] });
                }
            }
        }
        cols.extend_from_slice(&ra[x..]);
        cols.extend_from_slice(&rb[y..]);
        offsets.push(cols.len());
    }
    CsrMask::new(len, offsets, cols)
}

/// LongNet-style sparsity schedule: a budget of 2730 attended keys per query,
/// clamped to fully dense for short sequences.
pub fn longnet_sparsity(len: usize) -> f64 {
    (2730.0 / len as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::dense_to_csr;

    fn diagonal(len: usize) -> CsrMask {
        let grid: Vec<Vec<u8>> = (0..len)
            .map(|i| (0..len).map(|j| u8::from(i == j)).collect())
            .collect();
        dense_to_csr(&grid).unwrap()
    }

    #[test]
    fn union_of_disjoint_masks() {
        let a = diagonal(3);
        let b = dense_to_csr(&[vec![0, 0, 1], vec![0, 0, 0], vec![0, 0, 0]]).unwrap();
        let u = union_disjoint(&a, &b).unwrap();
        assert_eq!(u.nnz(), 4);
        assert!(u.contains(0, 2));
        assert!(u.contains(2, 2));
    }

    #[test]
    fn union_names_overlap_coordinate() {
        let a = diagonal(3);
        match union_disjoint(&a, &a) {
            Err(Error::MaskOverlap { row: 0, col: 0 }) => {}
            other => panic!("expected overlap at (0, 0), got {other:?}"),
        }
    }

    #[test]
    fn union_rejects_length_mismatch() {
        assert!(union_disjoint(&diagonal(2), &diagonal(3)).is_err());
    }

    #[test]
    fn longnet_schedule_values() {
        assert!(longnet_sparsity(1000) == 1.0);
        assert!((longnet_sparsity(16_384) - 0.1666259765625).abs() < 1e-12);
        assert!((longnet_sparsity(1_000_000_000) - 2.73e-6).abs() < 1e-18);
    }
}
