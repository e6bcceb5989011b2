//! Dense row-major matrices, seeded generation, and tolerance comparison.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use num_traits::Float;

/// Scalar element type for matrices and kernels. Kernels default to `f32`;
/// reference computations run in `f64` and comparisons cast up.
pub trait Element:
    Float + num_traits::NumAssign + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Map 64 random bits to a uniform value in `[0, 1)` using the type's
    /// full mantissa width.
    fn unit_from_bits(bits: u64) -> Self;
}

impl Element for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        (bits >> 40) as f32 * (1.0 / (1u64 << 24) as f32)
    }
}

impl Element for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Row-major `rows x cols` matrix. Immutable in normal use; kernels build
/// outputs through internal row-disjoint mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Element> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn same_shape<U: Element>(&self, other: &DenseMatrix<U>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Elementwise cast through `f64`.
    pub fn cast<U: Element>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// Comparison tolerances: an element pair passes when
/// `|a - b| <= atol + rtol * |b|`, with optional `NaN == NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub nan_equal: bool,
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64, nan_equal: bool) -> Result<Self> {
        if rtol.is_nan() || rtol < 0.0 {
            return Err(Error::InvalidTolerance(format!("rtol {rtol} must be >= 0")));
        }
        if atol.is_nan() || atol < 0.0 {
            return Err(Error::InvalidTolerance(format!("atol {atol} must be >= 0")));
        }
        Ok(Self {
            rtol,
            atol,
            nan_equal,
        })
    }

    /// The kernel-vs-reference tolerances used throughout verification:
    /// rtol 1e-5, atol 1e-8, NaN treated as equal.
    pub fn verification() -> Self {
        Self {
            rtol: 1e-5,
            atol: 1e-8,
            nan_equal: true,
        }
    }

    /// Single element-pair check, evaluated in `f64`.
    #[inline]
    pub fn pair_ok(&self, a: f64, b: f64) -> bool {
        if a.is_nan() || b.is_nan() {
            return self.nan_equal && a.is_nan() && b.is_nan();
        }
        (a - b).abs() <= self.atol + self.rtol * b.abs()
    }
}

/// `rows x cols` matrix of i.i.d. uniform `[0, 1)` values drawn from a
/// SplitMix64 stream seeded with `seed`. Identical arguments give
/// bit-identical output on every run and thread count.
pub fn random_uniform_matrix<T: Element>(
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<DenseMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::ZeroDimension { rows, cols });
    }
    let mut rng = SplitMix64::new(seed);
    let data = (0..rows * cols)
        .map(|_| T::unit_from_bits(rng.next_u64()))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

/// True when every element pair satisfies `tol`. Shape mismatch is an error,
/// not `false`.
pub fn allclose<T: Element>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    tol: &Tolerances,
) -> Result<bool> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch {
            a_rows: a.rows(),
            a_cols: a.cols(),
            b_rows: b.rows(),
            b_cols: b.cols(),
        });
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .all(|(&x, &y)| tol.pair_ok(x.to_f64(), y.to_f64())))
}
