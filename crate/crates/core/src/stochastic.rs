//! Continuous semigroups of distributions on [0, ∞) (plus the Gaussian law),
//! seeded sampling and Monte Carlo expectations of operator semigroups.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, operator_norm, ComplexMatrix, ExponentialTable, C64};
use crate::parallel::{map_indexed, tree_reduce};
use crate::random::mix_seed;
use crate::semigroup::{is_dissipative, BoundedGenerator};

/// Draws per chunk; each chunk has its own derived seed.
pub const CHUNK: usize = 8192;

const COUNT_STREAM: u64 = 1;
const DURATION_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DistributionSemigroup {
    Dirac,
    /// Poisson(λt)/λ.
    ScaledPoisson { rate: f64 },
    /// Sum of N ~ Poisson(λt) independent Exp(λ) durations.
    AuxiliaryPoisson { rate: f64 },
    Gaussian { drift: f64, diffusion: f64 },
}

impl DistributionSemigroup {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Dirac => Ok(()),
            Self::ScaledPoisson { rate } | Self::AuxiliaryPoisson { rate } => {
                if rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("rate {rate} must be positive and finite")))
                }
            }
            Self::Gaussian { drift, diffusion } => {
                if drift.is_finite() && diffusion >= 0.0 && diffusion.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("gaussian drift {drift} / diffusion {diffusion}")))
                }
            }
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, Self::Gaussian { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dirac => "dirac",
            Self::ScaledPoisson { .. } => "scaled-poisson",
            Self::AuxiliaryPoisson { .. } => "aux-poisson",
            Self::Gaussian { .. } => "gaussian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub law: DistributionSemigroup,
    pub t: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time {t} must be finite and >= 0")))
    }
}

fn chunk_rng(seed: u64, chunk: usize, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(mix_seed(seed, chunk as u64));
    r.set_stream(stream);
    r
}

fn sample_chunk(ds: DistributionSemigroup, t: f64, seed: u64, chunk: usize, len: usize) -> Vec<f64> {
    if t == 0.0 {
        return vec![0.0; len];
    }
    match ds {
        DistributionSemigroup::Dirac => vec![t; len],
        DistributionSemigroup::ScaledPoisson { rate } => {
            let mut g = chunk_rng(seed, chunk, 0);
            let pois = Poisson::new(rate * t).expect("validated rate");
            (0..len).map(|_| pois.sample(&mut g) / rate).collect()
        }
        DistributionSemigroup::AuxiliaryPoisson { rate } => {
            let mut counts = chunk_rng(seed, chunk, COUNT_STREAM);
            let mut durations = chunk_rng(seed, chunk, DURATION_STREAM);
            let pois = Poisson::new(rate * t).expect("validated rate");
            let exp = Exp::new(rate).expect("validated rate");
            (0..len)
                .map(|_| {
                    let n = pois.sample(&mut counts) as u64;
                    (0..n).map(|_| exp.sample(&mut durations)).sum::<f64>()
                })
                .collect()
        }
        DistributionSemigroup::Gaussian { drift, diffusion } => {
            let mut g = chunk_rng(seed, chunk, 0);
            let sd = (diffusion * t).sqrt();
            (0..len)
                .map(|_| {
                    let z: f64 = g.sample(StandardNormal);
                    drift * t + sd * z
                })
                .collect()
        }
    }
}

/// n independent draws of Γ(t). Reproducible in (law, t, n, seed).
pub fn sample(ds: DistributionSemigroup, t: f64, n: usize, seed: u64) -> Result<SampleBatch> {
    ds.validate()?;
    check_time(t)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts = map_indexed(chunks, |ci| {
        let len = CHUNK.min(n - ci * CHUNK);
        sample_chunk(ds, t, seed, ci, len)
    });
    Ok(SampleBatch { law: ds, t, seed, values: parts.concat() })
}

/// Closed-form (mean, variance).
pub fn moments(ds: DistributionSemigroup, t: f64) -> (f64, f64) {
    match ds {
        DistributionSemigroup::Dirac => (t, 0.0),
        DistributionSemigroup::ScaledPoisson { rate } => (t, t / rate),
        DistributionSemigroup::AuxiliaryPoisson { rate } => (t, 2.0 * t / rate),
        DistributionSemigroup::Gaussian { drift, diffusion } => (drift * t, diffusion * t),
    }
}

/// E[e^{iωθ}] in closed form.
pub fn characteristic_fn(ds: DistributionSemigroup, t: f64, omega: f64) -> C64 {
    let i = Complex64::i();
    match ds {
        DistributionSemigroup::Dirac => (i * omega * t).exp(),
        DistributionSemigroup::ScaledPoisson { rate } => {
            ((c(0.0, omega / rate).exp() - 1.0) * (rate * t)).exp()
        }
        DistributionSemigroup::AuxiliaryPoisson { rate } => {
            (i * omega / (c(rate, 0.0) - i * omega) * (rate * t)).exp()
        }
        DistributionSemigroup::Gaussian { drift, diffusion } => {
            c(-0.5 * diffusion * t * omega * omega, omega * drift * t).exp()
        }
    }
}

pub fn empirical_char_fn(batch: &SampleBatch, omega: f64) -> C64 {
    empirical_char_fn_values(&batch.values, omega)
}

fn empirical_char_fn_values(values: &[f64], omega: f64) -> C64 {
    let partial: Vec<C64> = values
        .chunks(CHUNK)
        .map(|ch| ch.iter().map(|&v| c(0.0, omega * v).exp()).sum::<C64>())
        .collect();
    tree_reduce(partial, |a, b| a + b).unwrap_or_default() / values.len() as f64
}

/// Sample mean and variance with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
}

pub fn empirical_moments(batch: &SampleBatch) -> EmpiricalMoments {
    let v = &batch.values;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let (m2, m4) = v.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d = (x - mean) * (x - mean);
        (a + d, b + d * d)
    });
    let variance = if v.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let mu4 = m4 / n;
    let var_se = ((mu4 - variance * variance).max(0.0) / n).sqrt();
    EmpiricalMoments { mean, variance, mean_std_error: (variance / n).sqrt(), variance_std_error: var_se }
}

/// max over ω of |φ̂_{Γ(s)*Γ(t)}(ω) − φ_{s+t}(ω)| with independent batches.
pub fn semigroup_law_check(
    ds: DistributionSemigroup,
    s: f64,
    t: f64,
    n: usize,
    omegas: &[f64],
    seed: u64,
) -> Result<f64> {
    let a = sample(ds, s, n, mix_seed(seed, 0x5EED_0001))?;
    let b = sample(ds, t, n, mix_seed(seed, 0x5EED_0002))?;
    let sum: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(omegas
        .iter()
        .map(|&w| (empirical_char_fn_values(&sum, w) - characteristic_fn(ds, s + t, w)).norm())
        .fold(0.0, f64::max))
}

/// Running sum and entrywise second moment of matrix samples.
#[derive(Clone, Debug)]
pub struct MatrixAccumulator {
    n: usize,
    sum: DMatrix<C64>,
    sum_sq: DMatrix<f64>,
}

impl MatrixAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, sum: DMatrix::zeros(dim, dim), sum_sq: DMatrix::zeros(dim, dim) }
    }

    pub fn push(&mut self, m: &ComplexMatrix) {
        self.n += 1;
        self.sum += m.as_dmatrix();
        self.sum_sq.zip_apply(m.as_dmatrix(), |s, z| *s += z.norm_sqr());
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn finish(self) -> MonteCarloEstimate {
        let n = self.n as f64;
        let mean = &self.sum / c(n, 0.0);
        let mut var_total = 0.0;
        if self.n > 1 {
            for (s2, m) in self.sum_sq.iter().zip(mean.iter()) {
                var_total += ((s2 - n * m.norm_sqr()) / (n - 1.0)).max(0.0);
            }
        }
        MonteCarloEstimate { mean: ComplexMatrix::wrap(mean), std_error: (var_total / n).sqrt(), n: self.n }
    }
}

/// MC mean with the Frobenius root-mean-square standard error
/// sqrt(Σ_entries Var / n).
#[derive(Clone, Debug)]
pub struct MonteCarloEstimate {
    pub mean: ComplexMatrix,
    pub std_error: f64,
    pub n: usize,
}

/// Rounding allowance added to every σ-test so that degenerate
/// (zero-variance) estimates compare cleanly.
pub const ROUNDING_FLOOR: f64 = 1e-12;

impl MonteCarloEstimate {
    pub fn deviation(&self, exact: &ComplexMatrix) -> f64 {
        operator_norm(&(&self.mean - exact))
    }

    pub fn within(&self, exact: &ComplexMatrix, sigmas: f64) -> bool {
        self.deviation(exact) <= sigmas * self.std_error + ROUNDING_FLOOR * (1.0 + operator_norm(exact))
    }
}

/// Evaluates `f(θ)` over a sample batch and averages, chunk by chunk with a
/// fixed merge tree.
pub fn average_over_samples<F>(values: &[f64], dim: usize, f: F) -> Result<MonteCarloEstimate>
where
    F: Fn(f64) -> Result<ComplexMatrix> + Sync,
{
    let chunks: Vec<&[f64]> = values.chunks(CHUNK).collect();
    let parts = map_indexed(chunks.len(), |ci| -> Result<MatrixAccumulator> {
        let mut acc = MatrixAccumulator::new(dim);
        for &v in chunks[ci] {
            acc.push(&f(v)?);
        }
        Ok(acc)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let acc = tree_reduce(parts, MatrixAccumulator::merge).ok_or_else(|| Error::InvalidParameter("empty batch".into()))?;
    Ok(acc.finish())
}

pub(crate) fn require_mc_admissible(g: &BoundedGenerator, ds: DistributionSemigroup) -> Result<()> {
    if !ds.is_nonnegative() {
        return Err(Error::Unsupported(format!("{} law has negative support; T(θ) is undefined for θ < 0", ds.name())));
    }
    let v = is_dissipative(g, crate::tolerances::DEFAULT_PSD_TOL)?;
    if !v.is_psd {
        return Err(Error::NotDissipative { min_eig: v.min_eigenvalue });
    }
    Ok(())
}

/// (1/n) Σ_k e^{θ_k A} with θ_k ~ Γ(t).
pub fn expectation_of_semigroup(
    g: &BoundedGenerator,
    ds: DistributionSemigroup,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    expectation_of_semigroup_scaled(g, ds, t, 1.0, n, seed)
}

/// (1/n) Σ_k e^{r θ_k A} with θ_k ~ Γ(t).
pub fn expectation_of_semigroup_scaled(
    g: &BoundedGenerator,
    ds: DistributionSemigroup,
    t: f64,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    require_mc_admissible(g, ds)?;
    let batch = sample(ds, t, n, seed)?;
    let max = batch.values.iter().copied().fold(0.0, f64::max) * r;
    let table = ExponentialTable::new(g.matrix(), max)?;
    average_over_samples(&batch.values, g.dim(), |v| table.eval(r * v))
}
