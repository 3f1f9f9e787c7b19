//! Default tolerances, collected in one place. Reports echo the effective values.

use serde::{Deserialize, Serialize};

pub const DEFAULT_PSD_TOL: f64 = 1e-9;
pub const DEFAULT_COMMUTATOR_TOL: f64 = crate::semigroup::DEFAULT_COMMUTATOR_TOL;
pub const DEFAULT_MC_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative PSD threshold: λ_min ≥ −psd·max(1, ‖M‖).
    pub psd: f64,
    /// Commutator gate relative to max‖A_i‖².
    pub commutator: f64,
    /// Monte Carlo acceptance in standard errors.
    pub mc_sigmas: f64,
    /// Absolute slack for polynomial-bound comparisons.
    pub bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { psd: DEFAULT_PSD_TOL, commutator: DEFAULT_COMMUTATOR_TOL, mc_sigmas: DEFAULT_MC_SIGMAS, bound: 1e-9 }
    }
}
