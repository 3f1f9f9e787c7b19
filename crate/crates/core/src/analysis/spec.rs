//! Family specification files.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::counterexample::{build_counterexample, CounterexampleParams};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};
use crate::monoid::ccr::CcrParams;
use crate::random::{mix_seed, random_dissipative, random_unitary, rng};
use crate::semigroup::CommutingFamily;
use crate::tolerances::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest Hilbert-space dimension a recipe may produce.
pub const MAX_RECIPE_DIM: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub family: FamilySource,
    #[serde(default)]
    pub battery: BatterySelection,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub monte_carlo: MonteCarloBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum FamilySource {
    /// Generators as row-major lists of [re, im] pairs.
    Explicit { generators: Vec<ComplexMatrix> },
    /// A_i = I ⊗ … ⊗ B_i ⊗ … ⊗ I with random dissipative B_i on ℂ^{dims[i]}.
    Tensor(TensorRecipe),
    /// A_i = U diag(z_i) U* with Re z_i ≤ −margin and one random unitary U.
    Normal(NormalRecipe),
    Counterexample(CounterexampleParams),
    /// Weighted shifts; only the monoid checks apply.
    Ccr(CcrParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecipe {
    pub dims: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalRecipe {
    pub d: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub margin: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySelection {
    pub complete_dissipativity: bool,
    pub pk_scan: bool,
    pub approximants: bool,
    pub polynomial_bounds: bool,
    pub gram: bool,
    /// Degree-≤1 corpus transfer with Monte Carlo; off by default.
    pub transfer: bool,
    /// Rerun the battery on every proper nonempty subfamily.
    pub subsets: bool,
}

impl Default for BatterySelection {
    fn default() -> Self {
        Self {
            complete_dissipativity: true,
            pk_scan: true,
            approximants: true,
            polynomial_bounds: true,
            gram: true,
            transfer: false,
            subsets: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Per-axis times; defaults to {0} ∪ {2^k ≤ t_max : k ≥ −10}.
    pub t_axis: Option<Vec<f64>>,
    pub t_max: f64,
    /// Cap on product-grid points.
    pub max_points: usize,
    /// Approximant rates λ.
    pub rates: Vec<f64>,
    /// Gram lattice scales h = 2^{−k}.
    pub gram_scales: Vec<i32>,
    pub gram_clouds: usize,
    pub gram_cloud_size: usize,
    pub gram_max_points: usize,
    /// Seed of the random entries of the polynomial corpus.
    pub corpus_seed: u64,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            t_axis: None,
            t_max: 16.0,
            max_points: 4096,
            rates: vec![2.0, 8.0, 32.0],
            gram_scales: vec![0, 1, 2, 3, 4, 5],
            gram_clouds: 2,
            gram_cloud_size: 8,
            gram_max_points: 27,
            corpus_seed: 0,
        }
    }
}

impl Grids {
    pub fn axis(&self) -> Vec<f64> {
        match &self.t_axis {
            Some(a) => a.clone(),
            None => crate::dissipativity::geometric_t_axis().into_iter().filter(|&t| t <= self.t_max).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloBudget {
    pub n: usize,
    pub seed: u64,
}

impl Default for MonteCarloBudget {
    fn default() -> Self {
        Self { n: 100_000, seed: 0 }
    }
}

impl FamilySpec {
    pub fn new(name: impl Into<String>, family: FamilySource) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            family,
            battery: BatterySelection::default(),
            grids: Grids::default(),
            tolerances: Tolerances::default(),
            monte_carlo: MonteCarloBudget::default(),
        }
    }

    /// Parses JSON; serde's messages carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FamilySpec = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::Spec(format!("{name}: {msg}"));
        if self.schema_version != SCHEMA_VERSION {
            return Err(field("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let g = &self.grids;
        let axis = g.axis();
        if axis.is_empty() || axis.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(field("grids.t_axis", "times must be finite, nonnegative and nonempty".into()));
        }
        if !(g.t_max.is_finite() && g.t_max >= 0.0) {
            return Err(field("grids.t_max", format!("{} is not a nonnegative number", g.t_max)));
        }
        if g.max_points == 0 || g.max_points > crate::dissipativity::MAX_GRID_POINTS {
            return Err(field("grids.max_points", format!("must lie in 1..={}", crate::dissipativity::MAX_GRID_POINTS)));
        }
        if g.rates.is_empty() || g.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(field("grids.rates", "rates must be positive and finite".into()));
        }
        if g.gram_max_points == 0 || g.gram_cloud_size > 64 || g.gram_scales.iter().any(|k| k.abs() > 30) {
            return Err(field("grids.gram_*", "gram schedule out of range".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [("psd", t.psd), ("commutator", t.commutator), ("mc_sigmas", t.mc_sigmas), ("bound", t.bound)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(field(&format!("tolerances.{name}"), format!("{v} is not a nonnegative number")));
            }
        }
        if self.battery.transfer && self.monte_carlo.n < 2 {
            return Err(field("monte_carlo.n", "transfer needs n >= 2".into()));
        }
        match &self.family {
            FamilySource::Explicit { generators } => {
                if generators.is_empty() {
                    return Err(field("family.generators", "at least one generator".into()));
                }
            }
            FamilySource::Tensor(r) => {
                let dim = r.dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b)).unwrap_or(usize::MAX);
                if r.dims.is_empty() || r.dims.contains(&0) || dim > MAX_RECIPE_DIM {
                    return Err(field("family.dims", format!("need nonzero factors with product <= {MAX_RECIPE_DIM}")));
                }
                check_recipe_numbers(r.scale, r.margin).map_err(|m| field("family", m))?;
            }
            FamilySource::Normal(r) => {
                if r.d == 0 || r.dim == 0 || r.dim > MAX_RECIPE_DIM {
                    return Err(field("family", format!("need d >= 1 and 1 <= dim <= {MAX_RECIPE_DIM}")));
                }
                check_recipe_numbers(r.scale, r.margin).map_err(|m| field("family", m))?;
            }
            FamilySource::Counterexample(p) => p.validate().map_err(|e| field("family", e.to_string()))?,
            FamilySource::Ccr(p) => p.validate().map_err(|e| field("family", e.to_string()))?,
        }
        Ok(())
    }

    /// The commuting family the battery runs on. CCR sources have none.
    pub fn build_family(&self) -> Result<CommutingFamily> {
        let tol = crate::semigroup::CommutingTolerance::Relative(self.tolerances.commutator);
        match &self.family {
            FamilySource::Explicit { generators } => {
                let gens = generators.iter().cloned().map(crate::semigroup::BoundedGenerator::new).collect::<Result<Vec<_>>>()?;
                CommutingFamily::with_tolerance(gens, tol)
            }
            FamilySource::Tensor(r) => tensor_family(r),
            FamilySource::Normal(r) => normal_family(r),
            FamilySource::Counterexample(p) => build_counterexample(p.d, p.dim1, p.dim2, p.alpha, p.seed),
            FamilySource::Ccr(_) => Err(Error::Unsupported("ccr sources have no generator family; use the monoid checks".into())),
        }
    }
}

fn check_recipe_numbers(scale: f64, margin: f64) -> std::result::Result<(), String> {
    if !(scale.is_finite() && scale > 0.0 && margin.is_finite() && margin >= 0.0) {
        return Err(format!("scale {scale} must be positive and margin {margin} nonnegative"));
    }
    Ok(())
}

pub fn tensor_family(r: &TensorRecipe) -> Result<CommutingFamily> {
    let mut g = rng(mix_seed(r.seed, 0x74656e73));
    let factors: Vec<ComplexMatrix> = r.dims.iter().map(|&n| random_dissipative(&mut g, n, r.scale, r.margin)).collect();
    let mats = (0..factors.len())
        .map(|i| {
            factors.iter().enumerate().fold(ComplexMatrix::identity(1), |acc, (j, f)| {
                if i == j {
                    acc.kron(f)
                } else {
                    acc.kron(&ComplexMatrix::identity(f.dim()))
                }
            })
        })
        .collect();
    CommutingFamily::from_matrices(mats)
}

pub fn normal_family(r: &NormalRecipe) -> Result<CommutingFamily> {
    let mut g = rng(mix_seed(r.seed, 0x6e6f726d));
    let u = random_unitary(&mut g, r.dim);
    let mats = (0..r.d)
        .map(|_| {
            let diag: Vec<C64> = (0..r.dim)
                .map(|_| c(-r.margin - r.scale * g.random_range(0.0..1.0), r.scale * g.random_range(-1.0..1.0)))
                .collect();
            &(&u * &ComplexMatrix::from_diagonal(&diag)) * &u.adjoint()
        })
        .collect();
    CommutingFamily::from_matrices(mats)
}
