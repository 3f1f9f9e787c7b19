//! Unitary N-power dilation of a single contraction on N+1 copies of the space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, operator_norm, svd, ComplexMatrix, C64};

/// Norm slack for accepting S as a contraction.
pub const CONTRACTION_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerDilation {
    pub horizon: usize,
    pub unitary: ComplexMatrix,
    /// The original space sits in these coordinates.
    pub embedding_columns: Vec<usize>,
    /// ‖U*U − I‖.
    pub unitarity_residual: f64,
    /// ‖P*U^kP − S^k‖ for k = 0..=N.
    pub power_residuals: Vec<f64>,
}

impl PowerDilation {
    pub fn max_power_residual(&self) -> f64 {
        self.power_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Block matrix with first column (S, D_S, 0, …), last column (D_{S*}, −S*, 0, …)
/// and identities on the subdiagonal below row 1. Defect operators come from
/// one SVD so that S D_S = D_{S*} S holds to rounding.
pub fn finite_power_dilation(s: &ComplexMatrix, horizon: usize) -> Result<PowerDilation> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let norm = operator_norm(s);
    if norm > 1.0 + CONTRACTION_SLACK {
        return Err(Error::InvalidParameter(format!("operator norm {norm} exceeds 1")));
    }
    let n = s.dim();
    let (w, sigma, v) = svd(s);
    let defect: Vec<C64> = sigma.iter().map(|x| c((1.0 - x.min(1.0).powi(2)).max(0.0).sqrt(), 0.0)).collect();
    let dg = ComplexMatrix::from_diagonal(&defect);
    let d_s = &(&v * &dg) * &v.adjoint();
    let d_s_star = &(&w * &dg) * &w.adjoint();

    let blocks = horizon + 1;
    let mut layout: Vec<Vec<Option<ComplexMatrix>>> = vec![vec![None; blocks]; blocks];
    layout[0][0] = Some(s.clone());
    layout[1][0] = Some(d_s);
    layout[0][blocks - 1] = Some(d_s_star);
    layout[1][blocks - 1] = Some(s.adjoint().scale_real(-1.0));
    for r in 2..blocks {
        layout[r][r - 1] = Some(ComplexMatrix::identity(n));
    }
    let u = ComplexMatrix::from_blocks(&layout, &vec![n; blocks])?;
    let total = n * blocks;
    let unitarity_residual = operator_norm(&(&(&u.adjoint() * &u) - &ComplexMatrix::identity(total)));

    let mut power_residuals = Vec::with_capacity(horizon + 1);
    let mut up = ComplexMatrix::identity(total);
    let mut sp = ComplexMatrix::identity(n);
    for k in 0..=horizon {
        if k > 0 {
            up = &up * &u;
            sp = &sp * s;
        }
        power_residuals.push(operator_norm(&(&up.sub_block(0, 0, n) - &sp)));
    }
    Ok(PowerDilation { horizon, unitary: u, embedding_columns: (0..n).collect(), unitarity_residual, power_residuals })
}
