//! Work-optimal sparse ("masked") attention on CPU.
//!
//! The attention mask is treated as the edge set of a token graph: token `i`
//! attends to token `j` exactly when the mask has a nonzero at `(i, j)`.
//! Kernels walk each row's neighbor list with a numerically stable online
//! softmax, so the number of query-key dot products equals the mask's nnz —
//! no work is spent on masked-out pairs.
//!
//! The crate provides:
//!
//! * [`tensor`] — a minimal row-major dense matrix, seeded uniform generation,
//!   and tolerance-based comparison.
//! * [`mask`] — COO/CSR binary masks, implicit mask patterns (local window,
//!   1D/2D dilated, global tokens, uniform random), conversions, disjoint
//!   union, and sparsity analytics.
//! * [`attention`] — the dense masked scaled-dot-product oracle and six
//!   neighbor-walking kernels (CSR, COO, local, 1D dilated, 2D dilated,
//!   global), all composable through carried softmax state and instrumented
//!   with an exact dot-product work counter.
//! * [`memmodel`] — a byte-level footprint model that solves for the maximum
//!   context length fitting a device memory budget.
//! * [`harness`] — a warmup/timed-iteration benchmark runner, Longformer and
//!   BigBird mask presets, and length sweeps.
//! * [`verify`] — kernel-vs-oracle comparison, work-count audits, and
//!   sequential-composition checks.

pub mod attention;
pub mod error;
pub mod harness;
pub mod mask;
pub mod memmodel;
pub mod rng;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{allclose, random_uniform_matrix, DenseMatrix, Element, Tolerances};
