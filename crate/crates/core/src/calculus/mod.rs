//! Operator-valued functional calculi.
//!
//! The discrete calculus Φ(f) = Σ f(x) T(x⁻)* T(x⁺) over a positivity
//! structure, its Gram-kernel positivity test, and the Phillips–le Merdy
//! calculus c·I + ∫ f(x) T(x) dx evaluated by quadrature.

pub mod quadrature;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, is_positive_semidefinite, operator_norm, ComplexMatrix, PsdVerdict, C64};
use crate::monoid::ccr::{representation, CcrFamily};
use crate::monoid::{Correlation, Group, GroupElement, PositivityStructure};
use crate::parallel::map_indexed;
use crate::random::{mix_seed, rng};
use crate::semigroup::{family_product, CommutingFamily};

pub use quadrature::{
    approximate_unit_check, phillips_lemerdy_eval, ApproximateUnitReport, CompactlySupportedDensity, Density,
    QuadratureResult, MAX_QUADRATURE_CELLS,
};

/// A homomorphism T from the submonoid M into contractions.
pub trait Representation: Sync {
    fn structure(&self) -> &PositivityStructure;
    fn dim(&self) -> usize;
    /// T(m) for m ∈ M.
    fn on_monoid(&self, m: &GroupElement) -> Result<ComplexMatrix>;
}

/// t ↦ ∏ e^{t_i A_i} on ℝ^d_{≥0} with the canonical structure.
pub struct SemigroupRepresentation {
    fam: CommutingFamily,
    ps: PositivityStructure,
}

impl SemigroupRepresentation {
    pub fn new(fam: CommutingFamily) -> Self {
        let ps = PositivityStructure::canonical(Group::Euclidean { d: fam.d() });
        Self { fam, ps }
    }

    pub fn family(&self) -> &CommutingFamily {
        &self.fam
    }
}

impl Representation for SemigroupRepresentation {
    fn structure(&self) -> &PositivityStructure {
        &self.ps
    }

    fn dim(&self) -> usize {
        self.fam.dim()
    }

    fn on_monoid(&self, m: &GroupElement) -> Result<ComplexMatrix> {
        match m {
            GroupElement::Euclidean { t } if self.ps.group.in_submonoid(m) => {
                let t: Vec<f64> = t.iter().map(|&v| v.max(0.0)).collect();
                family_product(&self.fam, &t)
            }
            _ => Err(Error::InvalidParameter(format!("{m:?} is not in the positive orthant of R^{}", self.fam.d()))),
        }
    }
}

/// (x, E) ↦ e^{λ(E + ⟨Dx, x⟩)} ∏ T_i(x_i) on H⁺_{d,C} for a weighted shift family.
pub struct CcrRepresentation {
    fam: CcrFamily,
    d_upper: Correlation,
    ps: PositivityStructure,
}

impl CcrRepresentation {
    pub fn new(fam: CcrFamily) -> Self {
        let d_upper = crate::monoid::ccr::family_correlation(&fam);
        let ps = PositivityStructure::canonical(Group::CorrelatedHeisenberg { c: d_upper.clone() });
        Self { fam, d_upper, ps }
    }
}

impl Representation for CcrRepresentation {
    fn structure(&self) -> &PositivityStructure {
        &self.ps
    }

    fn dim(&self) -> usize {
        self.fam.dim()
    }

    fn on_monoid(&self, m: &GroupElement) -> Result<ComplexMatrix> {
        let x = match m {
            GroupElement::CorrelatedHeisenberg { x, e } => {
                let snapped: Vec<f64> = x.iter().map(|v| v.round()).collect();
                if snapped.iter().zip(x).any(|(a, b)| (a - b).abs() > 1e-9) {
                    return Err(Error::InvalidParameter(format!("x = {x:?} is not grid aligned")));
                }
                GroupElement::CorrelatedHeisenberg { x: snapped.iter().map(|v| v.max(0.0)).collect(), e: *e }
            }
            _ => return Err(Error::ShapeMismatch("ccr representation needs an H_{d,C} element".into())),
        };
        representation(&self.fam, &self.d_upper, &x)
    }
}

/// Any closure on M; used for oracles.
pub struct FnRepresentation<F> {
    ps: PositivityStructure,
    dim: usize,
    f: F,
}

impl<F: Fn(&GroupElement) -> Result<ComplexMatrix> + Sync> FnRepresentation<F> {
    pub fn new(ps: PositivityStructure, dim: usize, f: F) -> Self {
        Self { ps, dim, f }
    }
}

impl<F: Fn(&GroupElement) -> Result<ComplexMatrix> + Sync> Representation for FnRepresentation<F> {
    fn structure(&self) -> &PositivityStructure {
        &self.ps
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn on_monoid(&self, m: &GroupElement) -> Result<ComplexMatrix> {
        (self.f)(m)
    }
}

/// T(x⁻)* T(x⁺).
pub fn regular_kernel<R: Representation + ?Sized>(rep: &R, x: &GroupElement) -> Result<ComplexMatrix> {
    let ps = rep.structure();
    let plus = rep.on_monoid(&ps.positive_part(x)?)?;
    let minus = rep.on_monoid(&ps.negative_part(x)?)?;
    Ok(&minus.adjoint() * &plus)
}

fn key(g: &GroupElement) -> Vec<u64> {
    // + 0.0 folds −0 into 0.
    g.coordinates().iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Element of c₀₀(G): distinct support points with nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitelySupportedFunction {
    group: Group,
    terms: Vec<(GroupElement, C64)>,
}

impl FinitelySupportedFunction {
    /// Merges repeated points and drops zero coefficients.
    pub fn new(group: Group, terms: Vec<(GroupElement, C64)>) -> Result<Self> {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut merged: Vec<(GroupElement, C64)> = Vec::new();
        for (g, z) in terms {
            group.check(&g)?;
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite("function coefficient".into()));
            }
            match index.get(&key(&g)) {
                Some(&i) => merged[i].1 += z,
                None => {
                    index.insert(key(&g), merged.len());
                    merged.push((g, z));
                }
            }
        }
        merged.retain(|(_, z)| *z != c(0.0, 0.0));
        Ok(Self { group, terms: merged })
    }

    pub fn delta(group: Group, x: GroupElement) -> Result<Self> {
        Self::new(group, vec![(x, c(1.0, 0.0))])
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn terms(&self) -> &[(GroupElement, C64)] {
        &self.terms
    }

    pub fn coefficient(&self, x: &GroupElement) -> C64 {
        let k = key(x);
        self.terms.iter().find(|(g, _)| key(g) == k).map_or(c(0.0, 0.0), |(_, z)| *z)
    }

    /// αf + βg.
    pub fn combine(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::ShapeMismatch("functions live on different groups".into()));
        }
        let terms = self
            .terms
            .iter()
            .map(|(g, z)| (g.clone(), alpha * z))
            .chain(other.terms.iter().map(|(g, z)| (g.clone(), beta * z)))
            .collect();
        Self::new(self.group.clone(), terms)
    }

    /// f*(x) = conj(f(x⁻¹)); the modular function is 1 on every implemented group.
    pub fn involution(&self) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(g, z)| Ok((self.group.inverse(g)?, z.conj())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.group.clone(), terms)
    }
}

/// (f ∗ g)(x) = Σ_y f(y) g(y⁻¹x).
pub fn convolution(f: &FinitelySupportedFunction, g: &FinitelySupportedFunction) -> Result<FinitelySupportedFunction> {
    if f.group != g.group {
        return Err(Error::ShapeMismatch("convolution of functions on different groups".into()));
    }
    let mut terms = Vec::with_capacity(f.terms.len() * g.terms.len());
    for (y, a) in &f.terms {
        for (z, b) in &g.terms {
            terms.push((f.group.mul(y, z)?, a * b));
        }
    }
    FinitelySupportedFunction::new(f.group.clone(), terms)
}

/// Φ(f) = Σ f(x) T(x⁻)* T(x⁺).
pub fn discrete_calculus_eval<R: Representation + ?Sized>(rep: &R, f: &FinitelySupportedFunction) -> Result<ComplexMatrix> {
    if f.group != rep.structure().group {
        return Err(Error::ShapeMismatch("function and representation live on different groups".into()));
    }
    let mut acc = ComplexMatrix::zeros(rep.dim());
    for (x, z) in &f.terms {
        acc.axpy(*z, &regular_kernel(rep, x)?);
    }
    Ok(acc)
}

/// ‖Φ(f ∗ g) − Φ(f)Φ(g)‖.
pub fn multiplicativity_check<R: Representation + ?Sized>(
    rep: &R,
    f: &FinitelySupportedFunction,
    g: &FinitelySupportedFunction,
) -> Result<f64> {
    let lhs = discrete_calculus_eval(rep, &convolution(f, g)?)?;
    let rhs = &discrete_calculus_eval(rep, f)? * &discrete_calculus_eval(rep, g)?;
    Ok(operator_norm(&(&lhs - &rhs)))
}

/// Block matrix [T((x_i⁻¹x_j)⁻)* T((x_i⁻¹x_j)⁺)]_{ij}.
pub fn gram_matrix<R: Representation + ?Sized>(rep: &R, points: &[GroupElement]) -> Result<ComplexMatrix> {
    let group = &rep.structure().group;
    let mut seen = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        group.check(p)?;
        if seen.insert(key(p), i).is_some() {
            return Err(Error::InvalidParameter(format!("gram point {i} is repeated")));
        }
    }
    let n = points.len();
    // Only i ≤ j is evaluated; the lower blocks are adjoints.
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut diffs: Vec<GroupElement> = Vec::new();
    let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut pair_slot = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let g = group.mul(&group.inverse(&points[i])?, &points[j])?;
        let k = key(&g);
        let s = *slot.entry(k).or_insert_with(|| {
            diffs.push(g);
            diffs.len() - 1
        });
        pair_slot.push(s);
    }
    let kernels = map_indexed(diffs.len(), |s| regular_kernel(rep, &diffs[s])).into_iter().collect::<Result<Vec<_>>>()?;
    let mut blocks: Vec<Vec<Option<ComplexMatrix>>> = vec![vec![None; n]; n];
    for (&(i, j), &s) in pairs.iter().zip(&pair_slot) {
        if i != j {
            blocks[j][i] = Some(kernels[s].adjoint());
        }
        blocks[i][j] = Some(kernels[s].clone());
    }
    ComplexMatrix::from_blocks(&blocks, &vec![rep.dim(); n])
}

/// PSD verdict of the Gram block matrix. FAIL certifies that T has no regular
/// unitary dilation; PASS only means no obstruction on these points.
pub fn gram_kernel_test<R: Representation + ?Sized>(rep: &R, points: &[GroupElement], tol: f64) -> Result<PsdVerdict> {
    is_positive_semidefinite(&gram_matrix(rep, points)?, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub label: String,
    pub points: Vec<GroupElement>,
}

/// Lattices {0, h, 2h}^d for h = 2^{−k}, k ∈ `scales` (falling back to {0, h}^d
/// when 3^d exceeds `max_points`), plus `clouds` random sets of `cloud_size`
/// points in [0, 2h]^d that contain the origin.
pub fn euclidean_gram_schedule(d: usize, scales: &[i32], clouds: usize, cloud_size: usize, max_points: usize, seed: u64) -> Vec<PointSet> {
    let levels: usize = if 3usize.saturating_pow(d as u32) <= max_points { 3 } else { 2 };
    let mut out = Vec::new();
    for &k in scales {
        let h = 2f64.powi(-k);
        let count = levels.pow(d as u32);
        let points = (0..count)
            .map(|mut idx| {
                let mut t = vec![0.0; d];
                for slot in t.iter_mut() {
                    *slot = (idx % levels) as f64 * h;
                    idx /= levels;
                }
                GroupElement::Euclidean { t }
            })
            .collect();
        out.push(PointSet { label: format!("lattice{levels}^{d} h=2^-{k}"), points });
    }
    let mut g = rng(mix_seed(seed, 0x6772616d));
    for (ci, &k) in scales.iter().cycle().take(clouds * usize::from(!scales.is_empty())).enumerate() {
        use rand::Rng;
        let h = 2f64.powi(-k);
        let mut points = vec![GroupElement::Euclidean { t: vec![0.0; d] }];
        while points.len() < cloud_size.max(1) {
            points.push(GroupElement::Euclidean { t: (0..d).map(|_| g.random_range(0.0..2.0 * h)).collect() });
        }
        out.push(PointSet { label: format!("cloud{ci} h=2^-{k}"), points });
    }
    out
}

/// Grid-aligned points (x, E) with x ∈ {0, …, max_step}^d and E ∈ `energies`.
pub fn heisenberg_gram_points(d: usize, max_step: u32, energies: &[f64]) -> Vec<GroupElement> {
    let levels = max_step as usize + 1;
    let mut out = Vec::new();
    for idx in 0..levels.pow(d as u32) {
        let mut x = vec![0.0; d];
        let mut r = idx;
        for slot in x.iter_mut() {
            *slot = (r % levels) as f64;
            r /= levels;
        }
        for &e in energies {
            out.push(GroupElement::CorrelatedHeisenberg { x: x.clone(), e });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramEntry {
    pub label: String,
    pub points: usize,
    pub verdict: PsdVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramScan {
    pub tol: f64,
    pub entries: Vec<GramEntry>,
    pub all_pass: bool,
    /// Point set with the most negative normalized eigenvalue among failures.
    pub witness: Option<PointSet>,
}

pub fn gram_scan<R: Representation + ?Sized>(rep: &R, schedule: &[PointSet], tol: f64) -> Result<GramScan> {
    let mut entries = Vec::with_capacity(schedule.len());
    let mut worst: Option<(f64, usize)> = None;
    for (i, set) in schedule.iter().enumerate() {
        let verdict = gram_kernel_test(rep, &set.points, tol)?;
        if !verdict.is_psd {
            let score = verdict.min_eigenvalue / verdict.scale.max(1.0);
            if worst.is_none_or(|(w, _)| score < w) {
                worst = Some((score, i));
            }
        }
        entries.push(GramEntry { label: set.label.clone(), points: set.points.len(), verdict });
    }
    Ok(GramScan { tol, all_pass: worst.is_none(), witness: worst.map(|(_, i)| schedule[i].clone()), entries })
}
