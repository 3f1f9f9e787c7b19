//! Seeded random matrices used by corpus generators and tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, orthonormal_columns, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn complex_normal<R: Rng>(g: &mut R) -> C64 {
    let re: f64 = g.sample(StandardNormal);
    let im: f64 = g.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian matrix normalized so that its operator norm is about `scale`.
pub fn random_matrix<R: Rng>(g: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    let s = scale / (2.0 * (n as f64).sqrt());
    ComplexMatrix::from_fn(n, |_, _| complex_normal(g) * s)
}

pub fn random_rect<R: Rng>(g: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(g))
}

pub fn random_hermitian<R: Rng>(g: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    let m = random_matrix(g, n, scale);
    (&m + &m.adjoint()).scale_real(0.5)
}

pub fn random_unitary<R: Rng>(g: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::wrap(orthonormal_columns(&random_rect(g, n, n)))
}

/// Isometry ℂ^cols → ℂ^rows (rows ≥ cols) from the thin QR of a Gaussian matrix.
pub fn random_isometry<R: Rng>(g: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    assert!(rows >= cols);
    orthonormal_columns(&random_rect(g, rows, cols))
}

pub fn random_unit_vector<R: Rng>(g: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| complex_normal(g)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random matrix shifted so that −(A+A*)/2 has smallest eigenvalue `margin`.
pub fn random_dissipative<R: Rng>(g: &mut R, n: usize, scale: f64, margin: f64) -> ComplexMatrix {
    let b = random_matrix(g, n, scale);
    let h = (b.as_dmatrix() + b.as_dmatrix().adjoint()) * c(0.5, 0.0);
    let top = h.symmetric_eigenvalues().max();
    &b - &ComplexMatrix::identity(n).scale_real(top + margin)
}

/// Random contraction with operator norm `norm`.
pub fn random_contraction<R: Rng>(g: &mut R, n: usize, norm: f64) -> ComplexMatrix {
    let m = random_matrix(g, n, 1.0);
    let s = crate::linalg::operator_norm(&m);
    m.scale_real(norm / s)
}
