//! Shared input builders for the criterion benches; see `benches/kernels.rs`.

use graphattn::tensor::{random_uniform_matrix, DenseMatrix};

pub type Inputs = (DenseMatrix<f32>, DenseMatrix<f32>, DenseMatrix<f32>);

/// Seeded Q, K, V triple.
pub fn inputs(len: usize, dim: usize, seed: u64) -> Inputs {
    (
        random_uniform_matrix(len, dim, seed).expect("valid shape"),
        random_uniform_matrix(len, dim, seed + 1).expect("valid shape"),
        random_uniform_matrix(len, dim, seed + 2).expect("valid shape"),
    )
}
