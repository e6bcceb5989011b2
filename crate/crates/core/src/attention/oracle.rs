//! Dense masked scaled-dot-product reference.

use crate::error::{Error, Result};
use crate::mask::CsrMask;
use crate::tensor::{DenseMatrix, Element};
use rayon::prelude::*;

/// Reference attention in the materialized dense style: computes the full
/// `L x L` score matrix `Q K^T / sqrt(d)`, overwrites masked-out entries with
/// `-inf`, applies a row-wise softmax, and multiplies by `V`. Runtime and
/// memory are quadratic in `L` regardless of mask sparsity.
///
/// A row with no mask nonzeros softmaxes a row of `-inf` and therefore comes
/// out as NaN in every column; callers comparing against the neighbor-walking
/// kernels treat such rows as equal to the kernels' zero rows.
pub fn sdp_masked_oracle<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    mask: &CsrMask,
) -> Result<DenseMatrix<T>> {
    let (len, dim) = super::check_input_shapes(q, k, v)?;
    if mask.len() != len {
        return Err(Error::InvalidMask(format!(
            "mask length {} does not match input length {len}",
            mask.len()
        )));
    }
    let scale = T::from_f64(1.0 / (dim as f64).sqrt());

    let mut probs = vec![T::zero(); len * len];
    let mut out = DenseMatrix::<T>::zeros(len, dim)?;
    probs
        .par_chunks_mut(len)
        .zip(out.data_mut().par_chunks_mut(dim))
        .enumerate()
        .for_each(|(i, (score_row, out_row))| {
            let q_row = q.row(i);
            for (j, slot) in score_row.iter_mut().enumerate() {
                *slot = super::dot(q_row, k.row(j)) * scale;
            }
            // Invalidate everything outside the mask.
            let allowed = mask.row(i);
            let mut next = 0usize;
            for (j, slot) in score_row.iter_mut().enumerate() {
                if next < allowed.len() && allowed[next] == j {
                    next += 1;
                } else {
                    *slot = T::neg_infinity();
                }
            }
            // Row softmax; an all -inf row turns into NaN everywhere.
            let row_max = score_row
                .iter()
                .fold(T::neg_infinity(), |acc, &s| acc.max(s));
            let mut sum = T::zero();
            for slot in score_row.iter_mut() {
                *slot = (*slot - row_max).exp();
                sum += *slot;
            }
            for slot in score_row.iter_mut() {
                *slot /= sum;
            }
            // Dense probability-times-value product.
            for (j, &p) in score_row.iter().enumerate() {
                let v_row = v.row(j);
                for (o, &val) in out_row.iter_mut().zip(v_row) {
                    *o += p * val;
                }
            }
        });
    Ok(out)
}
