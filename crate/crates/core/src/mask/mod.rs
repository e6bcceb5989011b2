//! Attention masks as token graphs.
//!
//! Tokens are vertices; a nonzero mask entry `(i, j)` is a directed edge that
//! lets query `i` attend to key `j`. Masks exist in two explicit formats
//! ([`CsrMask`], [`CooMask`]) and as implicit parameterized patterns
//! ([`MaskPattern`]) whose rows are computed arithmetically, never stored.

mod algebra;
mod convert;
mod coo;
mod csr;
mod io;

pub use algebra::{longnet_sparsity, union_disjoint};
pub use convert::{csr_to_dense, dense_to_csr};
pub use coo::CooMask;
pub use csr::CsrMask;
pub use io::{load_mask_file, read_csr_file, read_dense_csv, write_csr_file};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Membership test for the local window: `(i, j)` is attended exactly when
/// `|i - j| < window`. The self-edge is always included.
#[inline]
pub fn is_local(i: usize, j: usize, window: usize) -> bool {
    i.abs_diff(j) < window
}

/// Membership test for the 1D dilated window: within the local window and at
/// a distance divisible by `dilation`. `dilation == 1` reduces to
/// [`is_local`].
#[inline]
pub fn is_dilated1d(i: usize, j: usize, window: usize, dilation: usize) -> bool {
    let d = i.abs_diff(j);
    d < window && d.is_multiple_of(dilation)
}

/// Membership test for the 2D dilated pattern: `i` and `j` fall in the same
/// contiguous block of size `block`, and both within-block offsets are
/// divisible by `dilation`. `block` must divide `len`.
#[inline]
pub fn is_dilated2d(i: usize, j: usize, len: usize, block: usize, dilation: usize) -> Result<bool> {
    if block == 0 || !len.is_multiple_of(block) {
        return Err(Error::InvalidPattern(format!(
            "block size {block} must divide length {len}"
        )));
    }
    Ok(i / block == j / block
        && (i % block).is_multiple_of(dilation)
        && (j % block).is_multiple_of(dilation))
}

/// Implicit attention-mask families and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskPattern {
    /// `|i - j| < window`.
    Local { window: usize },
    /// `|i - j| < window` and `|i - j| % dilation == 0`.
    Dilated1d { window: usize, dilation: usize },
    /// Same block of size `block`, both offsets divisible by `dilation`.
    Dilated2d { block: usize, dilation: usize },
    /// Full rows and columns at the listed token indices, minus the local
    /// window of size `window` around the diagonal. Disjoint from
    /// `Local { window }` by construction.
    Global { indices: Vec<usize>, window: usize },
    /// Exactly `round(sparsity * L^2)` distinct coordinates sampled uniformly
    /// without replacement, deterministic per seed.
    Random { sparsity: f64, seed: u64 },
}

impl MaskPattern {
    /// Check parameters against a concrete sequence length.
    pub fn validate(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::InvalidPattern("length must be >= 1".into()));
        }
        match self {
            Self::Local { window } => {
                if *window == 0 {
                    return Err(Error::InvalidPattern("window must be >= 1".into()));
                }
            }
            Self::Dilated1d { window, dilation } => {
                if *window == 0 || *dilation == 0 {
                    return Err(Error::InvalidPattern(
                        "window and dilation must be >= 1".into(),
                    ));
                }
            }
            Self::Dilated2d { block, dilation } => {
                if *block == 0 || *dilation == 0 {
                    return Err(Error::InvalidPattern(
                        "block and dilation must be >= 1".into(),
                    ));
                }
                if !len.is_multiple_of(*block) {
                    return Err(Error::InvalidPattern(format!(
                        "block size {block} must divide length {len}"
                    )));
                }
            }
            Self::Global { indices, window } => {
                if *window == 0 {
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
            }
            Self::Random { sparsity, .. } => {
                if !(*sparsity > 0.0 && *sparsity <= 1.0) {
                    return Err(Error::InvalidPattern(format!(
                        "sparsity factor {sparsity} must be in (0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Materialize the pattern as a CSR mask whose nonzeros are exactly the
    /// coordinates accepted by the pattern's membership rule.
    pub fn generate(&self, len: usize) -> Result<CsrMask> {
        self.validate(len)?;
        if let Self::Random { sparsity, seed } = self {
            return generate_random(len, *sparsity, *seed);
        }
        let mut offsets = Vec::with_capacity(len + 1);
        offsets.push(0usize);
        let mut cols = Vec::new();
        for i in 0..len {
            self.extend_row(i, len, &mut cols);
            offsets.push(cols.len());
        }
        CsrMask::new(len, offsets, cols)
    }

    /// Ascending neighbor list of row `i`. Ordered patterns compute the list
    /// arithmetically; `Random` materializes the mask internally and reads
    /// the row out.
    pub fn neighbors(&self, i: usize, len: usize) -> Result<Vec<usize>> {
        self.validate(len)?;
        if i >= len {
            return Err(Error::RowOutOfRange { row: i, len });
        }
        if let Self::Random { .. } = self {
            let mask = self.generate(len)?;
            return Ok(mask.neighbors(i)?.to_vec());
        }
        let mut out = Vec::new();
        self.extend_row(i, len, &mut out);
        Ok(out)
    }

    fn extend_row(&self, i: usize, len: usize, out: &mut Vec<usize>) {
        match self {
            Self::Local { window } => out.extend(local_neighbors(i, *window, len)),
            Self::Dilated1d { window, dilation } => {
                out.extend(dilated1d_neighbors(i, *window, *dilation, len))
            }
            Self::Dilated2d { block, dilation } => {
                out.extend(dilated2d_neighbors(i, *block, *dilation, len))
            }
            Self::Global { indices, window } => {
                out.extend(global_neighbors(i, indices, *window, len))
            }
            Self::Random { .. } => unreachable!("random rows are read from the generated mask"),
        }
    }

    /// Exact nonzero count at length `len`, computed without materializing
    /// the mask.
    pub fn nnz(&self, len: usize) -> Result<usize> {
        self.validate(len)?;
        let total = match self {
            Self::Local { window } => (0..len).map(|i| local_row_count(i, *window, len)).sum(),
            Self::Dilated1d { window, dilation } => (0..len)
                .map(|i| dilated1d_row_count(i, *window, *dilation, len))
                .sum(),
            Self::Dilated2d { block, dilation } => {
                // Each block contributes ceil(b / r) active rows of
                // ceil(b / r) columns.
                let active = block.div_ceil(*dilation);
                (len / *block) * active * active
            }
            Self::Global { indices, window } => (0..len)
                .map(|i| global_row_count(i, indices, *window, len))
                .sum(),
            Self::Random { sparsity, .. } => round_count(*sparsity, len),
        };
        Ok(total)
    }

    /// Exact sparsity factor `nnz / L^2` at length `len`.
    pub fn sparsity_factor(&self, len: usize) -> Result<f64> {
        Ok(self.nnz(len)? as f64 / (len as f64 * len as f64))
    }
}

/// Nonzero count of a random mask: `round(sparsity * L^2)`, with `L^2`
/// formed exactly before the one floating-point product so the count does
/// not depend on association order.
pub(crate) fn round_count(sparsity: f64, len: usize) -> usize {
    (sparsity * (len as f64 * len as f64)).round() as usize
}

/// `j` with `|i - j| < window`, clipped to `[0, len)`.
#[inline]
pub(crate) fn local_neighbors(
    i: usize,
    window: usize,
    len: usize,
) -> std::ops::RangeInclusive<usize> {
    let lo = i.saturating_sub(window - 1);
    let hi = (i + window - 1).min(len - 1);
    lo..=hi
}

#[inline]
pub(crate) fn local_row_count(i: usize, window: usize, len: usize) -> usize {
    let lo = i.saturating_sub(window - 1);
    let hi = (i + window - 1).min(len - 1);
    hi - lo + 1
}

/// `j = i + t * dilation` with `|t * dilation| < window`, clipped to
/// `[0, len)`; every step keeps `|i - j|` divisible by the dilation.
#[inline]
pub(crate) fn dilated1d_neighbors(
    i: usize,
    window: usize,
    dilation: usize,
    len: usize,
) -> std::iter::StepBy<std::ops::RangeInclusive<usize>> {
    let reach = (window - 1) / dilation;
    let steps_left = reach.min(i / dilation);
    let steps_right = reach.min((len - 1 - i) / dilation);
    let lo = i - steps_left * dilation;
    let hi = i + steps_right * dilation;
    (lo..=hi).step_by(dilation)
}

#[inline]
pub(crate) fn dilated1d_row_count(i: usize, window: usize, dilation: usize, len: usize) -> usize {
    let reach = (window - 1) / dilation;
    reach.min(i / dilation) + reach.min((len - 1 - i) / dilation) + 1
}

/// Within row `i`'s block, the columns whose block offsets are divisible by
/// the dilation; empty when row `i`'s own offset is not.
#[inline]
pub(crate) fn dilated2d_neighbors(
    i: usize,
    block: usize,
    dilation: usize,
    _len: usize,
) -> std::iter::StepBy<std::ops::Range<usize>> {
    if !(i % block).is_multiple_of(dilation) {
        return (0..0).step_by(dilation);
    }
    let start = (i / block) * block;
    (start..start + block).step_by(dilation)
}

/// Row `i` of the global mask: for a global token, everything at distance
/// `>= window`; otherwise the global columns at distance `>= window`.
pub(crate) fn global_neighbors<'a>(
    i: usize,
    indices: &'a [usize],
    window: usize,
    len: usize,
) -> GlobalNeighbors<'a> {
    if indices.binary_search(&i).is_ok() {
        let left_end = if i >= window { i - window + 1 } else { 0 };
        GlobalNeighbors::GlobalRow {
            left: 0..left_end,
            right: (i + window).min(len)..len,
        }
    } else {
        GlobalNeighbors::PlainRow {
            candidates: indices.iter(),
            i,
            window,
        }
    }
}

pub(crate) fn global_row_count(i: usize, indices: &[usize], window: usize, len: usize) -> usize {
    if indices.binary_search(&i).is_ok() {
        len - local_row_count(i, window, len)
    } else {
        indices.iter().filter(|&&g| g.abs_diff(i) >= window).count()
    }
}

/// Iterator over one row of the global mask, ascending.
pub(crate) enum GlobalNeighbors<'a> {
    GlobalRow {
        left: std::ops::Range<usize>,
        right: std::ops::Range<usize>,
    },
    PlainRow {
        candidates: std::slice::Iter<'a, usize>,
        i: usize,
        window: usize,
    },
}

impl Iterator for GlobalNeighbors<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            Self::GlobalRow { left, right } => left.next().or_else(|| right.next()),
            Self::PlainRow {
                candidates,
                i,
                window,
            } => candidates.find(|&&g| g.abs_diff(*i) >= *window).copied(),
        }
    }
}

/// Uniform sample of exactly `round(sparsity * L^2)` distinct cells. When the
/// target exceeds half the grid the complement is sampled instead, keeping
/// generation O(nnz) expected.
fn generate_random(len: usize, sparsity: f64, seed: u64) -> Result<CsrMask> {
    let total = len
        .checked_mul(len)
        .ok_or_else(|| Error::InvalidPattern(format!("L^2 overflows usize for L = {len}")))?;
    let target = round_count(sparsity, len);
    let mut rng = SplitMix64::new(seed);

    if target == total {
        let mut offsets = Vec::with_capacity(len + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(total);
        for _ in 0..len {
            cols.extend(0..len);
            offsets.push(cols.len());
        }
        return CsrMask::new(len, offsets, cols);
    }

    let sample_complement = target > total / 2;
    let draw_count = if sample_complement {
        total - target
    } else {
        target
    };
    let mut drawn: HashSet<u64> = HashSet::with_capacity(draw_count);
    while drawn.len() < draw_count {
        drawn.insert(rng.next_below(total as u64));
    }

    let mut offsets = Vec::with_capacity(len + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(target);
    if sample_complement {
        for i in 0..len {
            let base = (i * len) as u64;
            cols.extend((0..len).filter(|&j| !drawn.contains(&(base + j as u64))));
            offsets.push(cols.len());
        }
    } else {
        let mut sorted: Vec<u64> = drawn.into_iter().collect();
        sorted.sort_unstable();
        let mut next = 0usize;
        for i in 0..len {
            let row_end = ((i + 1) * len) as u64;
            while next < sorted.len() && sorted[next] < row_end {
                cols.push((sorted[next] % len as u64) as usize);
                next += 1;
            }
            offsets.push(cols.len());
        }
    }
    debug_assert_eq!(cols.len(), target);
    CsrMask::new(len, offsets, cols)
}

/// Smallest-error local window for a target sparsity factor at length `len`.
pub fn fit_local_window(len: usize, target_sf: f64) -> usize {
    fit_window(len, target_sf, |w| {
        MaskPattern::Local { window: w }.nnz(len).expect("valid")
    })
}

/// Smallest-error 1D dilated window for a target sparsity factor.
pub fn fit_dilated1d_window(len: usize, dilation: usize, target_sf: f64) -> usize {
    fit_window(len, target_sf, |w| {
        MaskPattern::Dilated1d {
            window: w,
            dilation,
        }
        .nnz(len)
        .expect("valid")
    })
}

/// Divisor of `len` whose 2D dilated block pattern lands closest to a target
/// sparsity factor.
pub fn fit_dilated2d_block(len: usize, dilation: usize, target_sf: f64) -> usize {
    let target = target_sf * (len as f64) * (len as f64);
    let mut best = (1usize, f64::INFINITY);
    for b in 1..=len {
        if !len.is_multiple_of(b) {
            continue;
        }
        let nnz = MaskPattern::Dilated2d { block: b, dilation }
            .nnz(len)
            .expect("valid");
        let err = (nnz as f64 - target).abs();
        if err < best.1 {
            best = (b, err);
        }
    }
    best.0
}

fn fit_window(len: usize, target_sf: f64, nnz_of: impl Fn(usize) -> usize) -> usize {
    let target = target_sf * (len as f64) * (len as f64);
    // nnz is non-decreasing in the window size; binary search the smallest
    // window reaching the target, then compare with its predecessor.
    let (mut lo, mut hi) = (1usize, len.max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if (nnz_of(mid) as f64) < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo > 1 {
        let err_lo = (nnz_of(lo) as f64 - target).abs();
        let err_prev = (nnz_of(lo - 1) as f64 - target).abs();
        if err_prev <= err_lo {
            return lo - 1;
        }
    }
    lo
}

#[cfg(test)]
mod tests;
