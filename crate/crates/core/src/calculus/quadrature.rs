//! Phillips–le Merdy calculus Φ(f) = c·I + ∫_{ℝ^d_{≥0}} f(x) T(x) dx by the
//! tensor-product midpoint rule, with one Richardson step for the error.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, matrix_exponential, ComplexMatrix, C64};
use crate::parallel::{map_indexed, tree_reduce};
use crate::semigroup::CommutingFamily;

/// Cell budget for the fine grid.
pub const MAX_QUADRATURE_CELLS: usize = 1 << 22;

/// Scalar densities on a box.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Density {
    Constant { value: f64 },
    /// 1 / volume of the box.
    Uniform,
    /// ∏ λ_i e^{−λ_i x_i}.
    Exponential { rates: Vec<f64> },
    #[serde(skip)]
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Constant { value } => write!(f, "Constant({value})"),
            Density::Uniform => write!(f, "Uniform"),
            Density::Exponential { rates } => write!(f, "Exponential({rates:?})"),
            Density::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactlySupportedDensity {
    /// Per-axis [lo, hi] with 0 ≤ lo ≤ hi.
    pub bounds: Vec<(f64, f64)>,
    pub density: Density,
    /// Coarse cells per axis; the fine pass doubles each.
    pub resolution: Vec<usize>,
}

impl CompactlySupportedDensity {
    pub fn new(bounds: Vec<(f64, f64)>, density: Density, resolution: Vec<usize>) -> Result<Self> {
        let f = Self { bounds, density, resolution };
        f.validate()?;
        Ok(f)
    }

    pub fn d(&self) -> usize {
        self.bounds.len()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.bounds.len() != self.resolution.len() {
            return Err(Error::ShapeMismatch("density needs one resolution per axis".into()));
        }
        for &(a, b) in &self.bounds {
            if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= a) {
                return Err(Error::InvalidParameter(format!("box side [{a}, {b}] is not inside [0, inf)")));
            }
        }
        if self.resolution.contains(&0) {
            return Err(Error::InvalidParameter("quadrature resolution must be positive".into()));
        }
        match &self.density {
            Density::Exponential { rates } if rates.len() != self.d() => {
                Err(Error::ShapeMismatch(format!("{} rates for a {}-dimensional box", rates.len(), self.d())))
            }
            Density::Uniform if self.volume() == 0.0 => Err(Error::InvalidParameter("uniform density on a null box".into())),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.density {
            Density::Constant { value } => *value,
            Density::Uniform => 1.0 / self.volume(),
            Density::Exponential { rates } => rates.iter().zip(x).map(|(l, s)| l * (-l * s).exp()).product(),
            Density::Function(f) => f(x),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureResult {
    /// Fine-grid midpoint value.
    pub value: ComplexMatrix,
    /// Richardson extrapolation of the two grids.
    pub extrapolated: ComplexMatrix,
    /// ‖fine − coarse‖ / 3 in operator norm.
    pub error_estimate: f64,
    pub cells: usize,
}

fn midpoint(fam: &CommutingFamily, f: &CompactlySupportedDensity, resolution: &[usize]) -> Result<ComplexMatrix> {
    let d = f.d();
    let n = fam.dim();
    let h: Vec<f64> = f.bounds.iter().zip(resolution).map(|(&(a, b), &r)| (b - a) / r as f64).collect();
    // E_i[k] = e^{(a_i + (k + ½)h_i)A_i}, by repeated multiplication with e^{h_i A_i}.
    let mut axes: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(d);
    for i in 0..d {
        let a = fam.generator(i).matrix();
        let step = matrix_exponential(a, h[i])?;
        let mut cur = matrix_exponential(a, f.bounds[i].0 + 0.5 * h[i])?;
        let mut v = Vec::with_capacity(resolution[i]);
        for k in 0..resolution[i] {
            if k > 0 {
                cur = &cur * &step;
            }
            v.push(cur.clone());
        }
        axes.push(v);
    }
    let weight: f64 = h.iter().product();
    let first = resolution[0];
    let inner: usize = resolution[1..].iter().product();
    let partials = map_indexed(first, |k0| {
        let mut acc = ComplexMatrix::zeros(n);
        let mut x = vec![0.0; d];
        x[0] = f.bounds[0].0 + (k0 as f64 + 0.5) * h[0];
        for rest in 0..inner {
            let mut prod = axes[0][k0].clone();
            let mut r = rest;
            for i in 1..d {
                let k = r % resolution[i];
                r /= resolution[i];
                x[i] = f.bounds[i].0 + (k as f64 + 0.5) * h[i];
                prod = &prod * &axes[i][k];
            }
            let w = f.eval(&x);
            if w != 0.0 {
                acc.axpy(c(w * weight, 0.0), &prod);
            }
        }
        acc
    });
    Ok(tree_reduce(partials, |a, b| &a + &b).unwrap_or_else(|| ComplexMatrix::zeros(n)))
}

/// c·I + ∫ f(x) T(x) dx over the box of `f`.
pub fn phillips_lemerdy_eval(fam: &CommutingFamily, constant: C64, f: &CompactlySupportedDensity) -> Result<QuadratureResult> {
    f.validate()?;
    if f.d() != fam.d() {
        return Err(Error::ShapeMismatch(format!("{}-dimensional density for d = {}", f.d(), fam.d())));
    }
    let fine: Vec<usize> = f.resolution.iter().map(|r| 2 * r).collect();
    let cells = fine.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r)).unwrap_or(usize::MAX);
    if cells > MAX_QUADRATURE_CELLS {
        return Err(Error::InvalidParameter(format!("quadrature budget exceeded: {cells} cells > {MAX_QUADRATURE_CELLS}")));
    }
    let base = ComplexMatrix::identity(fam.dim()).scale(constant);
    let coarse = midpoint(fam, f, &f.resolution)?;
    let fine_v = midpoint(fam, f, &fine)?;
    let diff = &fine_v - &coarse;
    let error_estimate = crate::linalg::operator_norm(&diff) / 3.0;
    let extrapolated = &(&fine_v + &diff.scale_real(1.0 / 3.0)) + &base;
    Ok(QuadratureResult { value: &fine_v + &base, extrapolated, error_estimate, cells })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximateUnitReport {
    /// Side lengths of the boxes [0, s]^d.
    pub sides: Vec<f64>,
    /// max over probes of ‖Φ(f_K)ξ − ξ‖.
    pub errors: Vec<f64>,
    pub quadrature_errors: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Normalized indicators f_K = 1_K / |K| of K = [0, 2^{−k}]^d for k ∈ `scales`.
pub fn approximate_unit_check(
    fam: &CommutingFamily,
    scales: &[i32],
    probes: &[Vec<C64>],
    resolution: usize,
) -> Result<ApproximateUnitReport> {
    let n = fam.dim();
    let basis: Vec<Vec<C64>>;
    let probes = if probes.is_empty() {
        basis = (0..n).map(|i| (0..n).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
        &basis[..]
    } else {
        probes
    };
    if probes.iter().any(|p| p.len() != n) {
        return Err(Error::ShapeMismatch("probe length differs from the family dimension".into()));
    }
    let mut sides = Vec::new();
    let mut errors = Vec::new();
    let mut quadrature_errors = Vec::new();
    for &k in scales {
        let s = 2f64.powi(-k);
        let f = CompactlySupportedDensity::new(vec![(0.0, s); fam.d()], Density::Uniform, vec![resolution; fam.d()])?;
        let q = phillips_lemerdy_eval(fam, c(0.0, 0.0), &f)?;
        let e = probes
            .iter()
            .map(|xi| {
                let y = q.extrapolated.apply(xi);
                y.iter().zip(xi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        sides.push(s);
        errors.push(e);
        quadrature_errors.push(q.error_estimate);
    }
    let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(ApproximateUnitReport { sides, errors, quadrature_errors, strictly_decreasing })
}
