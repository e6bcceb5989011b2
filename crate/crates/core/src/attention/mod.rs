//! Attention kernels and the dense masked reference.
//!
//! Six kernels walk only the pairs the mask allows: two take explicit masks
//! (CSR, COO) and four compute their neighbor lists arithmetically (local
//! window, 1D dilated, 2D dilated, global tokens). All share one per-row
//! online-softmax loop and can be chained over disjoint masks by carrying
//! [`SoftmaxState`] and the partial output between calls.

mod kernels;
mod oracle;
mod softmax;

pub use kernels::TouchedPair;
pub use oracle::sdp_masked_oracle;
pub use softmax::{online_update, SoftmaxState};

use crate::error::{Error, Result};
use crate::mask::{CooMask, CsrMask, MaskPattern};
use crate::tensor::{DenseMatrix, Element};
use serde::{Deserialize, Serialize};

/// Kernel output: the attention matrix product, the final softmax statistics
/// (for sequential composition over disjoint masks), and the exact number of
/// query-key dot products performed, which equals the mask's nnz.
#[derive(Debug, Clone)]
pub struct AttentionResult<T> {
    pub output: DenseMatrix<T>,
    pub state: SoftmaxState<T>,
    pub work: u64,
}

impl<T: Element> AttentionResult<T> {
    /// Repackage for feeding into a follow-up kernel call. The follow-up
    /// mask must be disjoint from everything already absorbed, otherwise
    /// shared pairs would be softmaxed twice; explicit masks can be checked
    /// with [`crate::mask::union_disjoint`].
    pub fn into_carry(self) -> Carry<T> {
        Carry {
            state: self.state,
            output: self.output,
        }
    }
}

/// Carried state for sequential kernel composition.
#[derive(Debug, Clone)]
pub struct Carry<T> {
    pub state: SoftmaxState<T>,
    pub output: DenseMatrix<T>,
}

/// Tag for the six neighbor-walking kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Csr,
    Coo,
    Local,
    Dilated1d,
    Dilated2d,
    Global,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::Csr,
        KernelKind::Coo,
        KernelKind::Local,
        KernelKind::Dilated1d,
        KernelKind::Dilated2d,
        KernelKind::Global,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Csr => "csr",
            Self::Coo => "coo",
            Self::Local => "local",
            Self::Dilated1d => "dilated1d",
            Self::Dilated2d => "dilated2d",
            Self::Global => "global",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csr" => Ok(Self::Csr),
            "coo" => Ok(Self::Coo),
            "local" => Ok(Self::Local),
            "dilated1d" => Ok(Self::Dilated1d),
            "dilated2d" => Ok(Self::Dilated2d),
            "global" => Ok(Self::Global),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// A kernel together with the mask it runs on.
#[derive(Debug, Clone)]
pub enum KernelInput<'a> {
    Csr(&'a CsrMask),
    Coo(&'a CooMask),
    Local { window: usize },
    Dilated1d { window: usize, dilation: usize },
    Dilated2d { block: usize, dilation: usize },
    Global { indices: &'a [usize], window: usize },
}

impl KernelInput<'_> {
    pub fn kind(&self) -> KernelKind {
        match self {
            Self::Csr(_) => KernelKind::Csr,
            Self::Coo(_) => KernelKind::Coo,
            Self::Local { .. } => KernelKind::Local,
            Self::Dilated1d { .. } => KernelKind::Dilated1d,
            Self::Dilated2d { .. } => KernelKind::Dilated2d,
            Self::Global { .. } => KernelKind::Global,
        }
    }

    /// Exact nonzero count of the mask this input walks at length `len`.
    pub fn nnz(&self, len: usize) -> Result<usize> {
        match self {
            Self::Csr(m) => Ok(m.nnz()),
            Self::Coo(m) => Ok(m.nnz()),
            other => other.to_pattern().expect("pattern inputs").nnz(len),
        }
    }

    /// The equivalent implicit pattern, when this input is one.
    pub fn to_pattern(&self) -> Option<MaskPattern> {
        match self {
            Self::Local { window } => Some(MaskPattern::Local { window: *window }),
            Self::Dilated1d { window, dilation } => Some(MaskPattern::Dilated1d {
                window: *window,
                dilation: *dilation,
            }),
            Self::Dilated2d { block, dilation } => Some(MaskPattern::Dilated2d {
                block: *block,
                dilation: *dilation,
            }),
            Self::Global { indices, window } => Some(MaskPattern::Global {
                indices: indices.to_vec(),
                window: *window,
            }),
            Self::Csr(_) | Self::Coo(_) => None,
        }
    }
}

/// CSR kernel: walks `cols[offsets[i]..offsets[i + 1]]` per row.
pub fn attend_csr<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    mask: &CsrMask,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::csr_run(q, k, v, mask, init, false).map(|(r, _)| r)
}

/// COO kernel: binary-searches each row's span in the sorted coordinate
/// list, then walks it exactly like the CSR kernel.
pub fn attend_coo<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    mask: &CooMask,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::coo_run(q, k, v, mask, init, false).map(|(r, _)| r)
}

/// Local-window kernel: row `i` attends to `|i - j| < window`, indices
/// computed relative to the row with no materialized mask.
pub fn attend_local<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    window: usize,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::local_run(q, k, v, window, init, false).map(|(r, _)| r)
}

/// 1D dilated kernel: the local window thinned to distances divisible by
/// `dilation`.
pub fn attend_dilated1d<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    window: usize,
    dilation: usize,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::dilated1d_run(q, k, v, window, dilation, init, false).map(|(r, _)| r)
}

/// 2D dilated kernel: contiguous blocks of size `block` along the diagonal,
/// thinned by `dilation` in both the row and column offsets.
pub fn attend_dilated2d<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    block: usize,
    dilation: usize,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::dilated2d_run(q, k, v, block, dilation, init, false).map(|(r, _)| r)
}

/// Global-token kernel: the listed tokens attend everywhere and are attended
/// from everywhere, minus the local window of size `window`, which is left to
/// a companion local pass.
pub fn attend_global<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    indices: &[usize],
    window: usize,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    kernels::global_run(q, k, v, indices, window, init, false).map(|(r, _)| r)
}

/// Dispatch over [`KernelInput`].
pub fn attend<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    input: &KernelInput<'_>,
    init: Option<Carry<T>>,
) -> Result<AttentionResult<T>> {
    run(q, k, v, input, init, false).map(|(r, _)| r)
}

/// Like [`attend`], additionally recording every `(i, j)` pair the kernel
/// scores, in row order. The recording happens at the dot-product site inside
/// the kernel loop itself, so the returned list is exactly the set of pairs
/// that were computed.
pub fn attend_probed<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    input: &KernelInput<'_>,
    init: Option<Carry<T>>,
) -> Result<(AttentionResult<T>, Vec<TouchedPair>)> {
    run(q, k, v, input, init, true).map(|(r, pairs)| (r, pairs.expect("probe mode records pairs")))
}

fn run<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    input: &KernelInput<'_>,
    init: Option<Carry<T>>,
    probe: bool,
) -> Result<(AttentionResult<T>, Option<Vec<TouchedPair>>)> {
    match input {
        KernelInput::Csr(mask) => kernels::csr_run(q, k, v, mask, init, probe),
        KernelInput::Coo(mask) => kernels::coo_run(q, k, v, mask, init, probe),
        KernelInput::Local { window } => kernels::local_run(q, k, v, *window, init, probe),
        KernelInput::Dilated1d { window, dilation } => {
            kernels::dilated1d_run(q, k, v, *window, *dilation, init, probe)
        }
        KernelInput::Dilated2d { block, dilation } => {
            kernels::dilated2d_run(q, k, v, *block, *dilation, init, probe)
        }
        KernelInput::Global { indices, window } => {
            kernels::global_run(q, k, v, indices, *window, init, probe)
        }
    }
}

pub(crate) fn check_input_shapes<T: Element>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<(usize, usize)> {
    for other in [k, v] {
        if !q.same_shape(other) {
            return Err(Error::ShapeMismatch {
                a_rows: q.rows(),
                a_cols: q.cols(),
                b_rows: other.rows(),
                b_cols: other.cols(),
            });
        }
    }
    Ok((q.rows(), q.cols()))
}

#[inline]
pub(crate) fn dot<T: Element>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests;
