//! Hille and Yosida approximants and their representation as expectations
//! E[T(θ)] over scaled-Poisson and auxiliary-Poisson times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, matrix_exponential, operator_norm, resolvent, ComplexMatrix};
use crate::semigroup::{evaluate, growth_bound, BoundedGenerator, CommutingFamily, CommutingTolerance};
use crate::stochastic::{
    average_over_samples, expectation_of_semigroup_scaled, require_mc_admissible, sample, DistributionSemigroup,
    ROUNDING_FLOOR,
};
use crate::linalg::ExponentialTable;

/// Margin above max(0, ω₀) required of Yosida rates.
pub const YOSIDA_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ApproximantKind {
    Hille { rate: f64 },
    Yosida { rate: f64 },
}

impl ApproximantKind {
    pub fn rate(&self) -> f64 {
        match *self {
            Self::Hille { rate } | Self::Yosida { rate } => rate,
        }
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        match self {
            Self::Hille { .. } => Self::Hille { rate },
            Self::Yosida { .. } => Self::Yosida { rate },
        }
    }

    /// The distribution semigroup whose expectation reproduces the approximant.
    pub fn law(&self) -> DistributionSemigroup {
        match *self {
            Self::Hille { rate } => DistributionSemigroup::ScaledPoisson { rate },
            Self::Yosida { rate } => DistributionSemigroup::AuxiliaryPoisson { rate },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Hille { .. } => "hille",
            Self::Yosida { .. } => "yosida",
        }
    }

    pub fn validate_for(&self, g: &BoundedGenerator) -> Result<()> {
        let rate = self.rate();
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("approximant rate {rate} must be positive")));
        }
        if let Self::Yosida { .. } = self {
            let w = growth_bound(g)?.max(0.0);
            if rate <= w + YOSIDA_MARGIN {
                return Err(Error::InvalidParameter(format!(
                    "Yosida rate {rate} must exceed max(0, growth bound) + {YOSIDA_MARGIN} = {}",
                    w + YOSIDA_MARGIN
                )));
            }
        }
        Ok(())
    }
}

/// λ(e^{A/λ} − I).
pub fn hille_generator(g: &BoundedGenerator, lambda: f64) -> Result<BoundedGenerator> {
    ApproximantKind::Hille { rate: lambda }.validate_for(g)?;
    let e = matrix_exponential(g.matrix(), 1.0 / lambda)?;
    BoundedGenerator::new((&e - &ComplexMatrix::identity(g.dim())).scale_real(lambda))
}

/// λ²R(λ, A) − λI.
pub fn yosida_generator(g: &BoundedGenerator, lambda: f64) -> Result<BoundedGenerator> {
    ApproximantKind::Yosida { rate: lambda }.validate_for(g)?;
    let r = resolvent(g.matrix(), c(lambda, 0.0))?;
    BoundedGenerator::new(&r.scale_real(lambda * lambda) - &ComplexMatrix::identity(g.dim()).scale_real(lambda))
}

/// λ A R(λ, A), the second closed form of the Yosida generator.
pub fn yosida_generator_product_form(g: &BoundedGenerator, lambda: f64) -> Result<ComplexMatrix> {
    let r = resolvent(g.matrix(), c(lambda, 0.0))?;
    Ok((g.matrix() * &r).scale_real(lambda))
}

pub fn approximant_generator(g: &BoundedGenerator, kind: ApproximantKind) -> Result<BoundedGenerator> {
    match kind {
        ApproximantKind::Hille { rate } => hille_generator(g, rate),
        ApproximantKind::Yosida { rate } => yosida_generator(g, rate),
    }
}

/// e^{tA^{(λ)}}.
pub fn approximant_evaluate(g: &BoundedGenerator, kind: ApproximantKind, t: f64) -> Result<ComplexMatrix> {
    evaluate(&approximant_generator(g, kind)?, t)
}

/// Approximant generators of each member, as a family. The members commute
/// up to rounding, so the gate is skipped.
pub fn approximant_family(fam: &CommutingFamily, kinds: &[ApproximantKind]) -> Result<CommutingFamily> {
    if kinds.len() != fam.d() {
        return Err(Error::ShapeMismatch(format!("{} approximant kinds for {} generators", kinds.len(), fam.d())));
    }
    let gens = fam
        .generators()
        .iter()
        .zip(kinds)
        .map(|(g, k)| approximant_generator(g, *k))
        .collect::<Result<Vec<_>>>()?;
    CommutingFamily::with_tolerance(gens, CommutingTolerance::Override)
}

/// Σ_n e^{−λt}(λt)^n/n! · T(1/λ)^n, truncated once the Poisson tail times the
/// growth of ‖T(1/λ)‖^n falls below 1e-17.
pub fn hille_series(g: &BoundedGenerator, lambda: f64, t: f64) -> Result<ComplexMatrix> {
    ApproximantKind::Hille { rate: lambda }.validate_for(g)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    let n_dim = g.dim();
    if t == 0.0 {
        return Ok(ComplexMatrix::identity(n_dim));
    }
    let step = matrix_exponential(g.matrix(), 1.0 / lambda)?;
    let q = operator_norm(&step).max(1.0);
    let mu = lambda * t;
    let mut power = ComplexMatrix::identity(n_dim);
    let mut sum = ComplexMatrix::zeros(n_dim);
    let mut log_w = -mu;
    let mut n = 0usize;
    loop {
        let w = log_w.exp();
        sum.axpy(c(w, 0.0), &power);
        let growth = (n as f64) * q.ln();
        if n as f64 >= 2.0 * mu * q && (log_w + growth).exp() < 1e-17 {
            break;
        }
        if n > 100_000 {
            return Err(Error::InvalidParameter(format!("Poisson series for λt = {mu} is too long")));
        }
        n += 1;
        log_w += mu.ln() - (n as f64).ln();
        power = &power * &step;
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub deviation: f64,
    pub std_error: f64,
    pub n: usize,
    pub sigmas: f64,
    pub passes: bool,
}

impl IdentityCheck {
    fn new(deviation: f64, std_error: f64, n: usize, sigmas: f64, scale: f64) -> Self {
        let passes = deviation <= sigmas * std_error + ROUNDING_FLOOR * (1.0 + scale);
        Self { deviation, std_error, n, sigmas, passes }
    }
}

/// ‖e^{tA^{(λ)}} − (1/n)Σ e^{θ_k A}‖ with θ_k from the matching law.
pub fn expectation_identity_check(
    g: &BoundedGenerator,
    kind: ApproximantKind,
    t: f64,
    n: usize,
    seed: u64,
    sigmas: f64,
) -> Result<IdentityCheck> {
    let exact = approximant_evaluate(g, kind, t)?;
    let est = expectation_of_semigroup_scaled(g, kind.law(), t, 1.0, n, seed)?;
    Ok(IdentityCheck::new(est.deviation(&exact), est.std_error, n, sigmas, operator_norm(&exact)))
}

/// ‖(e^{tA^{(λ)}})* − (1/n)Σ (e^{θ_k A})*‖.
pub fn adjoint_identity_check(
    g: &BoundedGenerator,
    kind: ApproximantKind,
    t: f64,
    n: usize,
    seed: u64,
    sigmas: f64,
) -> Result<IdentityCheck> {
    require_mc_admissible(g, kind.law())?;
    let exact = approximant_evaluate(g, kind, t)?.adjoint();
    let batch = sample(kind.law(), t, n, seed)?;
    let max = batch.values.iter().copied().fold(0.0, f64::max);
    let table = ExponentialTable::new(g.matrix(), max)?;
    let est = average_over_samples(&batch.values, g.dim(), |v| Ok(table.eval(v)?.adjoint()))?;
    Ok(IdentityCheck::new(est.deviation(&exact), est.std_error, n, sigmas, operator_norm(&exact)))
}

/// ‖e^{rtA^{(λ)}} − (1/n)Σ e^{rθ_k A}‖ with θ_k drawn at rate rλ.
pub fn scaled_time_identity_check(
    g: &BoundedGenerator,
    kind: ApproximantKind,
    r: f64,
    t: f64,
    n: usize,
    seed: u64,
    sigmas: f64,
) -> Result<IdentityCheck> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {r} must be positive")));
    }
    let exact = approximant_evaluate(g, kind, r * t)?;
    let law = kind.with_rate(r * kind.rate()).law();
    let est = expectation_of_semigroup_scaled(g, law, t, r, n, seed)?;
    Ok(IdentityCheck::new(est.deviation(&exact), est.std_error, n, sigmas, operator_norm(&exact)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub rate: f64,
    pub sup_error: f64,
    /// sup over the grid of ‖e^{tA^{(λ)}}‖.
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceProfile {
    pub kind: String,
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    pub final_error: f64,
}

/// For each rate: sup over t of max over probes of ‖(e^{tA^{(λ)}} − e^{tA})ξ‖.
pub fn convergence_profile(
    g: &BoundedGenerator,
    kind: ApproximantKind,
    rates: &[f64],
    t_grid: &[f64],
    probes: &[Vec<crate::linalg::C64>],
) -> Result<ConvergenceProfile> {
    let exact: Vec<ComplexMatrix> = t_grid.iter().map(|&t| evaluate(g, t)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(rates.len());
    for &rate in rates {
        let ag = approximant_generator(g, kind.with_rate(rate))?;
        let mut sup_error: f64 = 0.0;
        let mut sup_norm: f64 = 0.0;
        for (&t, e) in t_grid.iter().zip(&exact) {
            let approx = evaluate(&ag, t)?;
            sup_norm = sup_norm.max(operator_norm(&approx));
            let diff = &approx - e;
            for xi in probes {
                let v = diff.apply(xi);
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                sup_error = sup_error.max(norm);
            }
        }
        rows.push(ConvergenceRow { rate, sup_error, sup_norm });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let final_error = rows.last().map(|r| r.sup_error).unwrap_or(0.0);
    Ok(ConvergenceProfile { kind: kind.name().into(), rows, strictly_decreasing, final_error })
}

/// {1, 2, 4, …, 1024}·max(1, ‖A‖).
pub fn default_rate_grid(g: &BoundedGenerator) -> Vec<f64> {
    let s = operator_norm(g.matrix()).max(1.0);
    (0..=10).map(|k| 2f64.powi(k) * s).collect()
}
