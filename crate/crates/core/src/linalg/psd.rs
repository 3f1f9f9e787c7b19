use serde::{Deserialize, Serialize};

use super::{c, ComplexMatrix};
use crate::error::{Error, Result};

/// Outcome of a positivity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Operator norm of the symmetrized matrix.
    pub scale: f64,
}

impl PsdVerdict {
    pub fn threshold(tol: f64, scale: f64) -> f64 {
        -tol * scale.max(1.0)
    }
}

const ANTI_HERMITIAN_LIMIT: f64 = 1e-6;

/// Symmetrizes `(M + M*)/2` and checks `λ_min ≥ −tol·max(1, ‖M‖)`.
///
/// Errors if the anti-Hermitian part exceeds 1e-6·max(1, ‖M‖_F) in Frobenius
/// norm.
pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> Result<PsdVerdict> {
    let a = m.as_dmatrix();
    let adj = a.adjoint();
    let skew_norm = (a - &adj).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * 0.5;
    let fro = m.frobenius_norm();
    let limit = ANTI_HERMITIAN_LIMIT * fro.max(1.0);
    if skew_norm > limit && skew_norm > f64::MIN_POSITIVE {
        return Err(Error::NotHermitian { antihermitian: skew_norm, limit });
    }
    let h = (a + adj) * c(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = eig.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !min.is_finite() {
        return Err(Error::NonFinite("eigenvalues".into()));
    }
    Ok(PsdVerdict { is_psd: min >= PsdVerdict::threshold(tol, scale), min_eigenvalue: min, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, C64};
    use crate::testutil::{random_hermitian, random_unit_vector, random_unitary, rng};

    #[test]
    fn examples() {
        let v = is_positive_semidefinite(&ComplexMatrix::identity(3), 1e-9).unwrap();
        assert!(v.is_psd);
        assert!((v.min_eigenvalue - 1.0).abs() < 1e-15);
        let v = is_positive_semidefinite(&ComplexMatrix::from_real_diagonal(&[1.0, -1.0]), 1e-9).unwrap();
        assert!(!v.is_psd);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_defect_is_psd() {
        let mut g = rng(17);
        for _ in 0..50 {
            let u = random_unitary(&mut g, 4);
            let m = &(&ComplexMatrix::identity(4).scale_real(2.0) - &u) - &u.adjoint();
            let v = is_positive_semidefinite(&m, 1e-9).unwrap();
            assert!(v.is_psd, "{v:?}");
            // brute force: eigenvalues are 2 - 2 Re λ for λ on the unit circle
            for _ in 0..20 {
                let x = random_unit_vector(&mut g, 4);
                let mx = m.apply(&x);
                let q: C64 = x.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum();
                assert!(q.re >= -1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(is_positive_semidefinite(&m, 1e-9), Err(Error::NotHermitian { .. })));
        // tiny asymmetry is symmetrized away
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(1e-12, 0.0);
        assert!(is_positive_semidefinite(&m, 1e-9).unwrap().is_psd);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn agrees_with_quadratic_forms(seed in any::<u64>(), shift in -0.5f64..0.5) {
                let tol = 1e-9;
                let mut g = rng(seed);
                let h = random_hermitian(&mut g, 4, 1.0);
                let m = &h + &ComplexMatrix::identity(4).scale_real(shift);
                let verdict = is_positive_semidefinite(&m, tol).unwrap();
                let mut min_q = f64::INFINITY;
                for _ in 0..1000 {
                    let x = random_unit_vector(&mut g, 4);
                    let mx = m.apply(&x);
                    let q: C64 = x.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum();
                    min_q = min_q.min(q.re);
                }
                // sampled quadratic forms never go below the true minimum
                prop_assert!(min_q >= verdict.min_eigenvalue - 1e-12);
                if verdict.is_psd {
                    prop_assert!(min_q >= PsdVerdict::threshold(tol, verdict.scale) - 1e-12);
                }
                if min_q < PsdVerdict::threshold(tol, verdict.scale) {
                    prop_assert!(!verdict.is_psd);
                }
            }
        }
    }
}
