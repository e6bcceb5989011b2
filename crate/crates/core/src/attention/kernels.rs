//! Neighbor-walking attention kernels.
//!
//! Every kernel runs the same per-row loop: enumerate the row's neighbors in
//! ascending column order, score each with a scaled query-key dot product,
//! and fold it into the row through [`online_update`]. Rows are independent
//! and processed in parallel; within a row the order is fixed, so results are
//! bit-identical under any scheduling. The dot-product count is returned as
//! `work` and equals the mask's nnz exactly.

use crate::attention::softmax::{online_update, SoftmaxState};
use crate::attention::{check_input_shapes, dot, AttentionResult, Carry};
use crate::error::{Error, Result};
use crate::mask::{self, CooMask, CsrMask};
use crate::tensor::{DenseMatrix, Element};
use rayon::prelude::*;

/// A query-key pair actually scored by a kernel, recorded by the probed
/// entry points.
pub type TouchedPair = (usize, usize);

pub(super) fn csr_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    mask: &CsrMask,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if mask.len() != len {
        return Err(Error::InvalidMask(format!(
            "mask length {} does not match input length {len}",
            mask.len()
        )));
    }
    engine(q, k, v, init, probe, |i| mask.row(i).iter().copied())
}

pub(super) fn coo_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    mask: &CooMask,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if mask.len() != len {
        return Err(Error::InvalidMask(format!(
            "mask length {} does not match input length {len}",
            mask.len()
        )));
    }
    // Row spans are found by binary search in the sorted rows vector; the
    // walk over a located span is identical to the CSR walk.
    engine(q, k, v, init, probe, |i| mask.row_span(i).iter().copied())
}

pub(super) fn local_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    window: usize,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if window == 0 {
        return Err(Error::InvalidPattern("window must be >= 1".into()));
    }
    engine(q, k, v, init, probe, |i| {
        mask::local_neighbors(i, window, len)
    })
}

pub(super) fn dilated1d_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    window: usize,
    dilation: usize,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if window == 0 || dilation == 0 {
        return Err(Error::InvalidPattern(
            "window and dilation must be >= 1".into(),
        ));
    }
    engine(q, k, v, init, probe, |i| {
        mask::dilated1d_neighbors(i, window, dilation, len)
    })
}

pub(super) fn dilated2d_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    block: usize,
    dilation: usize,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if block == 0 || dilation == 0 {
        return Err(Error::InvalidPattern(
            "block and dilation must be >= 1".into(),
        ));
    }
    if len % block != 0 {
        return Err(Error::InvalidPattern(format!(
            "block size {block} must divide length {len}"
        )));
    }
    engine(q, k, v, init, probe, |i| {
        mask::dilated2d_neighbors(i, block, dilation, len)
    })
}

pub(super) fn global_run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    indices: &[usize],
    window: usize,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    let (len, _) = check_input_shapes(q, k, v)?;
    if window == 0 {
        return Err(Error::InvalidPattern("window must be >= 1".into()));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPattern(
            "global indices must be strictly increasing".into(),
        ));
    }
    if indices.iter().any(|&g| g >= len) {
        return Err(Error::InvalidPattern(format!(
            "global index out of range [0, {len})"
        )));
    }
    engine(q, k, v, init, probe, |i| {
        mask::global_neighbors(i, indices, window, len)
    })
}

/// Shared row driver. Rows with no neighbors and no carried state stay zero;
/// the online recurrence never divides for them.
fn engine<T, N, F>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    init: Option<Carry<T>>,
    probe: bool,
    neighbors_of: F,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)>
where
    T: Element,
    N: Iterator<Item = usize>,
    F: Fn(usize) -> N + Sync,
{
    let len = q.rows();
    let dim = q.cols();
    let (mut out, mut max, mut denom) = prepare_state(len, dim, init)?;
    let scale = T::from_f64(1.0 / (dim as f64).sqrt());

    let (work, pairs) = if probe {
        let per_row: Vec<(u64, Vec<TouchedPair>)> = out
            .data_mut()
            .par_chunks_mut(dim)
            .zip(max.par_iter_mut())
            .zip(denom.par_iter_mut())
            .enumerate()
            .map(|(i, ((out_row, m), l))| {
                let mut touched = Vec::new();
                let count = process_row(
                    i,
                    q.row(i),
                    k,
                    v,
                    scale,
                    m,
                    l,
                    out_row,
                    neighbors_of(i),
                    Some(&mut touched),
                );
                (count, touched)
            })
            .collect();
        let mut work = 0u64;
        let mut pairs = Vec::new();
        for (count, touched) in per_row {
            work += count;
            pairs.extend(touched);
        }
        (work, Some(pairs))
    } else {
        let work = out
            .data_mut()
            .par_chunks_mut(dim)
            .zip(max.par_iter_mut())
            .zip(denom.par_iter_mut())
            .enumerate()
            .map(|(i, ((out_row, m), l))| {
                process_row(
                    i,
                    q.row(i),
                    k,
                    v,
                    scale,
                    m,
                    l,
                    out_row,
                    neighbors_of(i),
                    None,
                )
            })
            .sum();
        (work, None)
    };

    Ok((
        AttentionResult {
            output: out,
            state: SoftmaxState::from_parts(max, denom),
            work,
        },
        pairs,
    ))
}

/// One row of the neighbor walk. Every scored pair increments the work count
/// (and lands in the probe buffer when recording) at the same site the dot
/// product happens.
#[allow(clippy::too_many_arguments)]
#[inline]
fn process_row<T: Element>(
    i: usize,
    q_row: &[T],
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    scale: T,
    max: &mut T,
    denom: &mut T,
    out_row: &mut [T],
    neighbors: impl Iterator<Item = usize>,
    mut touched: Option<&mut Vec<TouchedPair>>,
) -> u64 {
    let mut count = 0u64;
    for j in neighbors {
        if let Some(buf) = touched.as_mut() {
            buf.push((i, j));
        }
        let score = dot(q_row, k.row(j)) * scale;
        let (m_new, l_new) = online_update(*max, *denom, out_row, score, v.row(j));
        *max = m_new;
        *denom = l_new;
        count += 1;
    }
    count
}

/// Split the optional carried state into the engine's working vectors,
/// enforcing the state invariants.
fn prepare_state<T: Element>(
    len: usize,
    dim: usize,
    init: Option<Carry<T>>,
) -> Result<(DenseMatrix<T>, Vec<T>, Vec<T>)> {
    match init {
        None => {
            let state = SoftmaxState::fresh(len);
            let (max, denom) = state.into_parts();
            Ok((DenseMatrix::zeros(len, dim)?, max, denom))
        }
        Some(carry) => {
            if carry.state.len() != len {
                return Err(Error::InvalidState(format!(
                    "carried state length {} does not match input length {len}",
                    carry.state.len()
                )));
            }
            if carry.output.rows() != len || carry.output.cols() != dim {
                return Err(Error::InvalidState(format!(
                    "carried output is {}x{}, expected {len}x{dim}",
                    carry.output.rows(),
                    carry.output.cols()
                )));
            }
            for i in 0..len {
                if carry.state.row_is_untouched(i)
                    && carry.output.row(i).iter().any(|&x| x != T::zero())
                {
                    return Err(Error::InvalidState(format!(
                        "row {i} has zero denominator but a nonzero carried output"
                    )));
                }
            }
            // Re-validate the numeric invariants on the carried vectors.
            let (max, denom) =
                SoftmaxState::new(carry.state.maxes().to_vec(), carry.state.denoms().to_vec())?
                    .into_parts();
            Ok((carry.output, max, denom))
        }
    }
}
