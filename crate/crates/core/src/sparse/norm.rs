use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseBlock, SparseMatrixCsc};

/// Anything that can apply itself and its transpose to a vector.
pub trait LinearMap {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, x: &[f64]) -> Vec<f64>;
}

impl LinearMap for DenseBlock {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.matvec_transpose(x)
    }
}

impl LinearMap for SparseMatrixCsc {
    fn nrows(&self) -> usize {
        self.n()
    }
    fn ncols(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.spmv(x).expect("length checked by caller")
    }
    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.spmv_transpose(x).expect("length checked by caller")
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Power-iteration estimate of the largest singular value, iterating on
/// `AᵀA` from a fixed pseudo-random start vector.
pub fn two_norm_estimate<M: LinearMap + ?Sized>(a: &M, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_b10c);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut sigma = 0.0;
    for _ in 0..iters.max(1) {
        let ax = a.apply(&x);
        sigma = norm2(&ax);
        if sigma == 0.0 {
            return 0.0;
        }
        let mut z = a.apply_transpose(&ax);
        let nz = norm2(&z);
        if nz == 0.0 {
            return sigma;
        }
        z.iter_mut().for_each(|v| *v /= nz);
        x = z;
    }
    sigma.max(norm2(&a.apply(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_known_spectrum() {
        let a = SparseMatrixCsc::from_diagonal(&[3.0, 1.0, 1.0]);
        assert!((two_norm_estimate(&a, 100) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(two_norm_estimate(&DenseBlock::zeros(4, 3), 10), 0.0);
        assert_eq!(two_norm_estimate(&SparseMatrixCsc::zeros(5), 10), 0.0);
    }

    #[test]
    fn random_dense_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = DenseBlock::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
        let sigma_max = b.to_nalgebra().singular_values().max();
        let est = two_norm_estimate(&b, 50);
        assert!((est - sigma_max).abs() <= 0.05 * sigma_max, "{est} vs {sigma_max}");
    }
}
