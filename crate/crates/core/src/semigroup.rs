//! Semigroups e^{tA} with bounded generators, commuting families, and the
//! time-average operators M = (1/t)∫₀ᵗ T(s) ds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    is_positive_semidefinite, matrix_exponential, operator_norm, spectral_abscissa, ComplexMatrix, PsdVerdict,
};
use crate::subset::{Subset, MAX_INDEX_COUNT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundedGenerator {
    a: ComplexMatrix,
}

impl BoundedGenerator {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFinite("generator".into()));
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// How the commutator bound of a family is gated at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CommutingTolerance {
    /// Reject when max ‖[A_i, A_j]‖ > rel · max(max‖A_i‖², tiny).
    Relative(f64),
    /// Accept any family; the bound is still recorded.
    Override,
}

pub const DEFAULT_COMMUTATOR_TOL: f64 = 1e-8;

impl Default for CommutingTolerance {
    fn default() -> Self {
        CommutingTolerance::Relative(DEFAULT_COMMUTATOR_TOL)
    }
}

#[derive(Clone, Debug)]
pub struct CommutingFamily {
    generators: Vec<BoundedGenerator>,
    commutator_bound: f64,
}

impl CommutingFamily {
    pub fn new(generators: Vec<BoundedGenerator>) -> Result<Self> {
        Self::with_tolerance(generators, CommutingTolerance::default())
    }

    pub fn with_tolerance(generators: Vec<BoundedGenerator>, tol: CommutingTolerance) -> Result<Self> {
        let d = generators.len();
        if d == 0 || d > MAX_INDEX_COUNT {
            return Err(Error::InvalidParameter(format!("family size {d} not in 1..={MAX_INDEX_COUNT}")));
        }
        let dim = generators[0].dim();
        if generators.iter().any(|g| g.dim() != dim) {
            return Err(Error::ShapeMismatch("generators have different dimensions".into()));
        }
        let mut bound: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                let c = generators[i].matrix().commutator(generators[j].matrix());
                bound = bound.max(operator_norm(&c));
            }
        }
        if let CommutingTolerance::Relative(rel) = tol {
            let scale = generators.iter().map(|g| operator_norm(g.matrix())).fold(0.0, f64::max);
            let limit = rel * scale * scale;
            if bound > limit && bound > f64::MIN_POSITIVE {
                return Err(Error::NonCommuting { norm: bound, limit });
            }
        }
        Ok(Self { generators, commutator_bound: bound })
    }

    pub fn from_matrices(mats: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(mats.into_iter().map(BoundedGenerator::new).collect::<Result<Vec<_>>>()?)
    }

    pub fn d(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn generators(&self) -> &[BoundedGenerator] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &BoundedGenerator {
        &self.generators[i]
    }

    pub fn matrices(&self) -> Vec<ComplexMatrix> {
        self.generators.iter().map(|g| g.matrix().clone()).collect()
    }

    pub fn commutator_bound(&self) -> f64 {
        self.commutator_bound
    }

    /// Family restricted to the members in `k` (order preserved).
    pub fn restrict(&self, k: Subset) -> Result<Self> {
        k.check_within(self.d())?;
        let gens: Vec<BoundedGenerator> = k.indices().iter().map(|&i| self.generators[i].clone()).collect();
        Self::with_tolerance(gens, CommutingTolerance::Override)
    }

    /// Product of the generators over `k` in increasing index order.
    pub fn generator_product(&self, k: Subset) -> ComplexMatrix {
        k.indices()
            .iter()
            .fold(ComplexMatrix::identity(self.dim()), |acc, &i| &acc * self.generators[i].matrix())
    }
}

/// T(t) = e^{tA}, t ≥ 0.
pub fn evaluate(g: &BoundedGenerator, t: f64) -> Result<ComplexMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("semigroup time {t} must be >= 0")));
    }
    matrix_exponential(g.matrix(), t)
}

/// ∏_i e^{t_i A_i}, multiplied left to right in index order.
pub fn family_product(fam: &CommutingFamily, t: &[f64]) -> Result<ComplexMatrix> {
    if t.len() != fam.d() {
        return Err(Error::ShapeMismatch(format!("{} times for {} generators", t.len(), fam.d())));
    }
    let mut acc = ComplexMatrix::identity(fam.dim());
    for (g, &ti) in fam.generators.iter().zip(t) {
        if ti != 0.0 {
            acc = &acc * &evaluate(g, ti)?;
        }
    }
    Ok(acc)
}

/// PSD verdict of −(A+A*)/2.
pub fn is_dissipative(g: &BoundedGenerator, tol: f64) -> Result<PsdVerdict> {
    let a = g.matrix();
    let m = (a + &a.adjoint()).scale_real(-0.5);
    is_positive_semidefinite(&m, tol)
}

/// Spectral abscissa max Re σ(A), which is ω₀ for matrices.
pub fn growth_bound(g: &BoundedGenerator) -> Result<f64> {
    spectral_abscissa(g.matrix())
}

/// M = Σ_k (tA)^k/(k+1)!, evaluated at t/2^s with ‖tA‖/2^s ≤ 1/2 and lifted
/// by M(2τ) = ½(I + e^{τA}) M(τ).
pub fn time_average(g: &BoundedGenerator, t: f64) -> Result<ComplexMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("averaging time {t} must be > 0")));
    }
    let a = g.matrix();
    let n = a.dim();
    let norm = a.one_norm() * t;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let tau = t / 2f64.powi(s);
    let x = a.scale_real(tau);
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let mut k = 1usize;
    loop {
        term = (&term * &x).scale_real(1.0 / (k as f64 + 1.0));
        sum += &term;
        let inc = term.frobenius_norm();
        if inc <= 1e-16 * sum.frobenius_norm() || inc == 0.0 || k > 200 {
            break;
        }
        k += 1;
    }
    let mut m = sum;
    let mut step = tau;
    for _ in 0..s {
        let e = matrix_exponential(a, step)?;
        m = (&(&ComplexMatrix::identity(n) + &e) * &m).scale_real(0.5);
        step *= 2.0;
    }
    Ok(m)
}

/// ‖∏_i F_i − (∏_{k∈K} A_k) ∏_i M_i‖ with F_i = (T_i(t_i) − I)/t_i for i ∈ K
/// and F_i = M_i otherwise.
pub fn multi_time_average_check(fam: &CommutingFamily, t: &[f64], k: Subset) -> Result<f64> {
    if t.len() != fam.d() {
        return Err(Error::ShapeMismatch(format!("{} times for {} generators", t.len(), fam.d())));
    }
    k.check_within(fam.d())?;
    let n = fam.dim();
    let mut lhs = ComplexMatrix::identity(n);
    let mut m_prod = ComplexMatrix::identity(n);
    for (i, g) in fam.generators.iter().enumerate() {
        let m_i = time_average(g, t[i])?;
        let f_i = if k.contains(i) {
            (&evaluate(g, t[i])? - &ComplexMatrix::identity(n)).scale_real(1.0 / t[i])
        } else {
            m_i.clone()
        };
        lhs = &lhs * &f_i;
        m_prod = &m_prod * &m_i;
    }
    let rhs = &fam.generator_product(k) * &m_prod;
    Ok(operator_norm(&(&lhs - &rhs)))
}
