//! Weighted shift families on the grid {0, …, N−1}^m with zero padding:
//! (T_i(1)f)(x) = e^{λ⟨α_i, x⟩} f(x + u_i), T_i(k) = T_i(1)^k.
//!
//! They satisfy T_j(t)T_i(s) = e^{2λstC_ij} T_i(s)T_j(t) with
//! C_ij = ½(⟨α_i, u_j⟩ − ⟨α_j, u_i⟩), and T(x, E) = e^{λ(E + ⟨Dx, x⟩)} ∏ T_i(x_i)
//! is a representation of H_{d,C} on grid-aligned x when D is the strictly
//! upper part of C.

use serde::{Deserialize, Serialize};

use super::{Correlation, Group, GroupElement};
use crate::error::{Error, Result};
use crate::linalg::{c, operator_norm, ComplexMatrix, C64};
use crate::parallel::map_indexed;

/// Largest grid, N^m, the builder accepts.
pub const MAX_GRID_SIZE: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcrParams {
    pub m: usize,
    pub n: usize,
    /// One shift vector per member, nonnegative grid steps.
    pub u: Vec<Vec<u32>>,
    pub alpha: Vec<Vec<f64>>,
    /// Serialized as [re, im].
    pub lambda: C64,
}

impl CcrParams {
    pub fn d(&self) -> usize {
        self.u.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("ccr grid needs m >= 1 and N >= 1".into()));
        }
        let size = (self.n as u128).checked_pow(self.m as u32).unwrap_or(u128::MAX);
        if size > MAX_GRID_SIZE as u128 {
            return Err(Error::InvalidParameter(format!("ccr grid N^m = {size} exceeds {MAX_GRID_SIZE}")));
        }
        if self.u.is_empty() || self.u.len() != self.alpha.len() {
            return Err(Error::ShapeMismatch(format!(
                "ccr family needs matching nonempty u ({}) and alpha ({}) lists",
                self.u.len(),
                self.alpha.len()
            )));
        }
        for (i, (u, a)) in self.u.iter().zip(&self.alpha).enumerate() {
            if u.len() != self.m || a.len() != self.m {
                return Err(Error::ShapeMismatch(format!("ccr member {i}: u and alpha must have length m = {}", self.m)));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("alpha of ccr member {i}")));
            }
        }
        if !self.lambda.re.is_finite() || !self.lambda.im.is_finite() {
            return Err(Error::NonFinite("ccr lambda".into()));
        }
        if self.lambda.re > 0.0 {
            return Err(Error::InvalidParameter(format!("ccr lambda {} has positive real part", self.lambda)));
        }
        // Off the imaginary axis the weights stay contractive only for α ≥ 0.
        if self.lambda.re < 0.0 && self.alpha.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("ccr alpha must be >= 0 when Re lambda < 0".into()));
        }
        Ok(())
    }

    /// C_ij = ½(⟨α_i, u_j⟩ − ⟨α_j, u_i⟩).
    pub fn c_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.d();
        let ip = |a: &[f64], u: &[u32]| a.iter().zip(u).map(|(x, &s)| x * s as f64).sum::<f64>();
        (0..d)
            .map(|i| (0..d).map(|j| 0.5 * (ip(&self.alpha[i], &self.u[j]) - ip(&self.alpha[j], &self.u[i]))).collect())
            .collect()
    }

    /// The group H_{d,C} this family represents.
    pub fn group(&self) -> Group {
        let cm = self.c_matrix();
        let d = self.d();
        let upper = (0..d).map(|i| (0..d).map(|j| if j > i { cm[i][j] } else { 0.0 }).collect()).collect();
        Group::CorrelatedHeisenberg { c: Correlation { upper } }
    }
}

#[derive(Clone, Debug)]
pub struct CcrFamily {
    params: CcrParams,
    c: Vec<Vec<f64>>,
    unit: Vec<ComplexMatrix>,
}

impl CcrFamily {
    pub fn params(&self) -> &CcrParams {
        &self.params
    }

    pub fn d(&self) -> usize {
        self.unit.len()
    }

    pub fn dim(&self) -> usize {
        self.unit[0].dim()
    }

    pub fn c_matrix(&self) -> &[Vec<f64>] {
        &self.c
    }

    /// T_i(1).
    pub fn unit_step(&self, i: usize) -> &ComplexMatrix {
        &self.unit[i]
    }

    /// T_i(k) for a nonnegative integer k.
    pub fn evaluate(&self, i: usize, k: f64) -> Result<ComplexMatrix> {
        if i >= self.d() {
            return Err(Error::InvalidParameter(format!("member {i} out of range")));
        }
        Ok(self.unit[i].pow(grid_steps(k)?))
    }

    /// U(E) = e^{λE}.
    pub fn scalar(&self, e: f64) -> C64 {
        (self.params.lambda * e).exp()
    }

    /// Rebuilds the shifts with α_i[k] += delta while keeping the current C,
    /// so that the relation check measures the damage.
    pub fn with_alpha_mutation(&self, i: usize, k: usize, delta: f64) -> Result<CcrFamily> {
        let mut params = self.params.clone();
        *params
            .alpha
            .get_mut(i)
            .and_then(|a| a.get_mut(k))
            .ok_or_else(|| Error::InvalidParameter(format!("alpha[{i}][{k}] out of range")))? += delta;
        let unit = unit_shifts(&params);
        Ok(CcrFamily { params, c: self.c.clone(), unit })
    }
}

fn grid_steps(k: f64) -> Result<u32> {
    if !(k >= 0.0) || k.fract() != 0.0 || k > u32::MAX as f64 {
        return Err(Error::InvalidParameter(format!("grid model accepts nonnegative integer steps only, got {k}")));
    }
    Ok(k as u32)
}

fn unit_shifts(p: &CcrParams) -> Vec<ComplexMatrix> {
    let size = p.n.pow(p.m as u32);
    let coords = |mut idx: usize| {
        let mut x = vec![0usize; p.m];
        for slot in x.iter_mut().rev() {
            *slot = idx % p.n;
            idx /= p.n;
        }
        x
    };
    let index = |x: &[usize]| x.iter().fold(0, |acc, &v| acc * p.n + v);
    p.u.iter()
        .zip(&p.alpha)
        .map(|(u, a)| {
            let mut m = ComplexMatrix::zeros(size);
            for row in 0..size {
                let x = coords(row);
                let target: Vec<usize> = x.iter().zip(u).map(|(&xi, &ui)| xi + ui as usize).collect();
                if target.iter().any(|&t| t >= p.n) {
                    continue;
                }
                let w: f64 = a.iter().zip(&x).map(|(ai, &xi)| ai * xi as f64).sum();
                m[(row, index(&target))] = (p.lambda * w).exp();
            }
            m
        })
        .collect()
}

pub fn build_ccr_family(params: &CcrParams) -> Result<CcrFamily> {
    params.validate()?;
    Ok(CcrFamily { params: params.clone(), c: params.c_matrix(), unit: unit_shifts(params) })
}

/// ‖T_j(t)T_i(s) − e^{2stλC_ij} T_i(s)T_j(t)‖.
pub fn ccr_relation_check(fam: &CcrFamily, s: f64, t: f64, i: usize, j: usize) -> Result<f64> {
    let ti = fam.evaluate(i, s)?;
    let tj = fam.evaluate(j, t)?;
    let phase = (fam.params.lambda * (2.0 * s * t * fam.c[i][j])).exp();
    Ok(operator_norm(&(&(&tj * &ti) - &(&ti * &tj).scale(phase))))
}

/// Worst relation residual over all ordered pairs and steps 0..=max_step.
pub fn ccr_relation_sweep(fam: &CcrFamily, max_step: u32) -> Result<f64> {
    let d = fam.d();
    let steps = max_step as usize + 1;
    let total = d * d * steps * steps;
    let residuals = map_indexed(total, |idx| {
        let (pair, st) = (idx / (steps * steps), idx % (steps * steps));
        ccr_relation_check(fam, (st / steps) as f64, (st % steps) as f64, pair / d, pair % d)
    });
    residuals.into_iter().try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

/// T(x, E) = U(E + ⟨Dx, x⟩) T_1(x_1) ⋯ T_d(x_d).
pub fn representation(fam: &CcrFamily, d_upper: &Correlation, g: &GroupElement) -> Result<ComplexMatrix> {
    let (x, e) = match g {
        GroupElement::CorrelatedHeisenberg { x, e } if x.len() == fam.d() => (x, *e),
        _ => return Err(Error::ShapeMismatch("representation needs an H_{d,C} element of matching d".into())),
    };
    if d_upper.d() != fam.d() {
        return Err(Error::ShapeMismatch(format!("D is {}x{}, family has d = {}", d_upper.d(), d_upper.d(), fam.d())));
    }
    let mut out = ComplexMatrix::identity(fam.dim());
    for (i, &xi) in x.iter().enumerate() {
        out = &out * &fam.evaluate(i, xi)?;
    }
    Ok(out.scale(fam.scalar(e + d_upper.upper_form(x))))
}

/// ‖T(g1)T(g2) − T(g1·g2)‖ with the group law of H_{d, D−Dᵀ}.
pub fn heisenberg_homomorphism(fam: &CcrFamily, d_upper: &Correlation, g1: &GroupElement, g2: &GroupElement) -> Result<f64> {
    let group = Group::CorrelatedHeisenberg { c: d_upper.clone() };
    let prod = group.mul(g1, g2)?;
    let lhs = &representation(fam, d_upper, g1)? * &representation(fam, d_upper, g2)?;
    let rhs = representation(fam, d_upper, &prod)?;
    Ok(operator_norm(&(&lhs - &rhs)))
}

/// Strictly upper part of the family's C as a [`Correlation`].
pub fn family_correlation(fam: &CcrFamily) -> Correlation {
    match fam.params.group() {
        Group::CorrelatedHeisenberg { c } => c,
        _ => unreachable!(),
    }
}

/// A small corpus of valid parameter sets used by the tests and the CLI.
pub fn default_ccr_corpus() -> Vec<CcrParams> {
    vec![
        CcrParams { m: 1, n: 6, u: vec![vec![1], vec![2]], alpha: vec![vec![0.5], vec![0.25]], lambda: c(-0.3, 0.0) },
        CcrParams {
            m: 2,
            n: 6,
            u: vec![vec![1, 2], vec![2, 1]],
            alpha: vec![vec![0.3, 0.1], vec![0.2, 0.4]],
            lambda: c(-0.2, 0.5),
        },
        CcrParams {
            m: 2,
            n: 5,
            u: vec![vec![1, 1], vec![1, 2], vec![2, 1]],
            alpha: vec![vec![-0.7, 0.2], vec![0.4, 1.1], vec![0.9, -0.3]],
            lambda: c(0.0, 0.8),
        },
        CcrParams {
            m: 3,
            n: 4,
            u: vec![vec![1, 1, 1], vec![1, 2, 1]],
            alpha: vec![vec![0.1, 0.2, 0.3], vec![0.3, 0.0, 0.2]],
            lambda: c(-0.1, -0.4),
        },
    ]
}
