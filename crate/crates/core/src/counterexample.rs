//! Commuting dissipative families that are not completely dissipative:
//! A_i = −I + [[0, 2αV_i], [0, 0]] on ℂ^{dim₁} ⊕ ℂ^{dim₂} with isometries
//! V_i : ℂ^{dim₂} → ℂ^{dim₁}.
//!
//! All products of the nilpotent parts vanish, so the generators commute
//! exactly. For α ∈ (1/√d, 1/√(d−1)) every proper subfamily is completely
//! dissipative while the full family is not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, operator_norm, spectrum_clusters, ComplexMatrix, C64};
use crate::random::{random_isometry, rng};
use crate::semigroup::{BoundedGenerator, CommutingFamily, CommutingTolerance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    pub d: usize,
    pub dim1: usize,
    pub dim2: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl CounterexampleParams {
    /// Open interval (1/√d, 1/√(d−1)).
    pub fn alpha_interval(d: usize) -> (f64, f64) {
        (1.0 / (d as f64).sqrt(), 1.0 / ((d - 1) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.d > 8 {
            return Err(Error::InvalidParameter(format!("counterexample needs 2 <= d <= 8, got {}", self.d)));
        }
        if self.dim2 == 0 || self.dim2 > self.dim1 {
            return Err(Error::InvalidParameter(format!(
                "counterexample needs 1 <= dim2 <= dim1, got dim1={} dim2={}",
                self.dim1, self.dim2
            )));
        }
        let (lo, hi) = Self::alpha_interval(self.d);
        if !(self.alpha > lo && self.alpha < hi) {
            return Err(Error::InvalidParameter(format!("alpha {} outside ({lo:.6}, {hi:.6})", self.alpha)));
        }
        Ok(())
    }
}

/// Builds the family and runs the construction-time gates.
pub fn build_counterexample(d: usize, dim1: usize, dim2: usize, alpha: f64, seed: u64) -> Result<CommutingFamily> {
    let params = CounterexampleParams { d, dim1, dim2, alpha, seed };
    params.validate()?;
    let mut g = rng(seed);
    let n = dim1 + dim2;
    let mut gens = Vec::with_capacity(d);
    for _ in 0..d {
        let v = random_isometry(&mut g, dim1, dim2);
        let a = ComplexMatrix::from_fn(n, |r, col| {
            let mut z: C64 = if r == col { c(-1.0, 0.0) } else { c(0.0, 0.0) };
            if r < dim1 && col >= dim1 {
                z += v[(r, col - dim1)] * (2.0 * alpha);
            }
            z
        });
        gens.push(BoundedGenerator::new(a)?);
    }
    let fam = CommutingFamily::with_tolerance(gens, CommutingTolerance::default())?;
    check_gates(&fam)?;
    Ok(fam)
}

fn check_gates(fam: &CommutingFamily) -> Result<()> {
    let n = fam.dim();
    for g in fam.generators() {
        let a = g.matrix();
        let v = crate::semigroup::is_dissipative(g, crate::tolerances::DEFAULT_PSD_TOL)?;
        if !v.is_psd {
            return Err(Error::InvalidParameter(format!("counterexample generator not dissipative ({})", v.min_eigenvalue)));
        }
        // (A + I)² = 0 pins the spectrum to {−1}.
        let shifted = a + &ComplexMatrix::identity(n);
        let sq = operator_norm(&(&shifted * &shifted));
        if sq > 1e-12 {
            return Err(Error::InvalidParameter(format!("(A+I)^2 has norm {sq:e}")));
        }
        let clusters = spectrum_clusters(a)?;
        if clusters.len() != 1 || (clusters[0].center + 1.0).norm() > 1e-9 {
            return Err(Error::InvalidParameter("counterexample spectrum is not {-1}".into()));
        }
    }
    Ok(())
}

/// Largest |λ + 1| over the cluster centers of each generator.
pub fn spectrum_deviation_from_minus_one(fam: &CommutingFamily) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in fam.generators() {
        for cl in spectrum_clusters(g.matrix())? {
            worst = worst.max((cl.center + 1.0).norm());
        }
    }
    Ok(worst)
}
