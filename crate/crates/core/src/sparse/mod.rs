//! Matrix containers, norms, products and Matrix Market IO.

mod csc;
mod dense;
mod market;
mod norm;

pub use csc::SparseMatrixCsc;
pub use dense::DenseBlock;
pub use market::{format_matrix_market, parse_matrix_market, read_matrix_market, write_matrix_market};
pub use norm::{two_norm_estimate, LinearMap};

/// Euclidean norm of a vector.
pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
