//! Groups with positive submonoids: ℝ^d, the Heisenberg group H_d, the
//! correlated Heisenberg group H_{d,C}, and finite products of these.
//! Positivity structures x ↦ x⁺, axiom checks, and e-joint witnesses.

pub mod ccr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{mix_seed, rng};

/// Slack in the submonoid membership test, so rounded images still count.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Antisymmetric C = D − Dᵀ from a strictly upper triangular D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Correlation {
    upper: Vec<Vec<f64>>,
}

impl Correlation {
    /// `upper[i][j]` for j > i is used; everything on or below the diagonal
    /// must be zero.
    pub fn from_upper(upper: Vec<Vec<f64>>) -> Result<Self> {
        let d = upper.len();
        for (i, row) in upper.iter().enumerate() {
            if row.len() != d {
                return Err(Error::ShapeMismatch(format!("correlation row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite("correlation entry".into()));
                }
                if j <= i && v != 0.0 {
                    return Err(Error::InvalidParameter(format!("D[{i}][{j}] = {v} is not strictly upper triangular")));
                }
            }
        }
        Ok(Self { upper })
    }

    pub fn zero(d: usize) -> Self {
        Self { upper: vec![vec![0.0; d]; d] }
    }

    pub fn random<R: Rng>(g: &mut R, d: usize, scale: f64) -> Self {
        let upper = (0..d).map(|i| (0..d).map(|j| if j > i { g.random_range(-scale..scale) } else { 0.0 }).collect()).collect();
        Self { upper }
    }

    pub fn d(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[Vec<f64>] {
        &self.upper
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.upper[i][j] - self.upper[j][i]
    }

    /// ⟨Cx, y⟩.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.d();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += self.entry(i, j) * x[j] * y[i];
            }
        }
        s
    }

    /// ⟨Dx, x⟩.
    pub fn upper_form(&self, x: &[f64]) -> f64 {
        let d = self.d();
        let mut s = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                s += self.upper[i][j] * x[j] * x[i];
            }
        }
        s
    }
}

impl TryFrom<Vec<Vec<f64>>> for Correlation {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_upper(v)
    }
}

impl From<Correlation> for Vec<Vec<f64>> {
    fn from(c: Correlation) -> Self {
        c.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "kebab-case")]
pub enum Group {
    Euclidean { d: usize },
    Heisenberg { d: usize },
    CorrelatedHeisenberg { c: Correlation },
    Product { factors: Vec<Group> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupElement {
    Euclidean { t: Vec<f64> },
    Heisenberg { x: Vec<f64>, p: Vec<f64>, e: f64 },
    CorrelatedHeisenberg { x: Vec<f64>, e: f64 },
    Product { parts: Vec<GroupElement> },
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pos(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

impl Group {
    pub fn identity(&self) -> GroupElement {
        match self {
            Group::Euclidean { d } => GroupElement::Euclidean { t: vec![0.0; *d] },
            Group::Heisenberg { d } => GroupElement::Heisenberg { x: vec![0.0; *d], p: vec![0.0; *d], e: 0.0 },
            Group::CorrelatedHeisenberg { c } => GroupElement::CorrelatedHeisenberg { x: vec![0.0; c.d()], e: 0.0 },
            Group::Product { factors } => GroupElement::Product { parts: factors.iter().map(Group::identity).collect() },
        }
    }

    /// Total number of real coordinates.
    pub fn coordinate_count(&self) -> usize {
        match self {
            Group::Euclidean { d } => *d,
            Group::Heisenberg { d } => 2 * d + 1,
            Group::CorrelatedHeisenberg { c } => c.d() + 1,
            Group::Product { factors } => factors.iter().map(Group::coordinate_count).sum(),
        }
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        let ok = match (self, g) {
            (Group::Euclidean { d }, GroupElement::Euclidean { t }) => t.len() == *d,
            (Group::Heisenberg { d }, GroupElement::Heisenberg { x, p, .. }) => x.len() == *d && p.len() == *d,
            (Group::CorrelatedHeisenberg { c }, GroupElement::CorrelatedHeisenberg { x, .. }) => x.len() == c.d(),
            (Group::Product { factors }, GroupElement::Product { parts }) => {
                if factors.len() != parts.len() {
                    false
                } else {
                    for (f, p) in factors.iter().zip(parts) {
                        f.check(p)?;
                    }
                    true
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("element {g:?} does not belong to {self:?}")))
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    fn mul_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        use GroupElement as G;
        match (self, a, b) {
            (_, G::Euclidean { t }, G::Euclidean { t: s }) => G::Euclidean { t: add(t, s) },
            (_, G::Heisenberg { x, p, e }, G::Heisenberg { x: x2, p: p2, e: e2 }) => G::Heisenberg {
                x: add(x, x2),
                p: add(p, p2),
                e: e + e2 + 0.5 * (dot(p, x2) - dot(p2, x)),
            },
            (Group::CorrelatedHeisenberg { c }, G::CorrelatedHeisenberg { x, e }, G::CorrelatedHeisenberg { x: x2, e: e2 }) => {
                G::CorrelatedHeisenberg { x: add(x, x2), e: e + e2 + c.form(x, x2) }
            }
            (Group::Product { factors }, G::Product { parts }, G::Product { parts: parts2 }) => G::Product {
                parts: factors.iter().zip(parts).zip(parts2).map(|((f, p), q)| f.mul_unchecked(p, q)).collect(),
            },
            _ => unreachable!("checked by Group::check"),
        }
    }

    /// g⁻¹ = −g in every implemented variant (⟨Cx, x⟩ = 0).
    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(negate(g))
    }

    /// Submonoid membership with slack [`MEMBERSHIP_TOL`].
    pub fn in_submonoid(&self, g: &GroupElement) -> bool {
        let nonneg = |v: &[f64]| v.iter().all(|&x| x >= -MEMBERSHIP_TOL);
        match (self, g) {
            (Group::Euclidean { .. }, GroupElement::Euclidean { t }) => nonneg(t),
            (Group::Heisenberg { .. }, GroupElement::Heisenberg { x, p, .. }) => nonneg(x) && nonneg(p),
            (Group::CorrelatedHeisenberg { .. }, GroupElement::CorrelatedHeisenberg { x, .. }) => nonneg(x),
            (Group::Product { factors }, GroupElement::Product { parts }) => {
                factors.len() == parts.len() && factors.iter().zip(parts).all(|(f, p)| f.in_submonoid(p))
            }
            _ => false,
        }
    }

    /// Coordinates drawn from N(0, 3²), each zeroed with probability 1/5 so
    /// that boundary cases are common.
    pub fn random_element<R: Rng>(&self, g: &mut R) -> GroupElement {
        let coord = |g: &mut R| {
            if g.random_bool(0.2) {
                0.0
            } else {
                3.0 * g.sample::<f64, _>(rand_distr::StandardNormal)
            }
        };
        let vec = |g: &mut R, n: usize| (0..n).map(|_| coord(g)).collect::<Vec<f64>>();
        match self {
            Group::Euclidean { d } => GroupElement::Euclidean { t: vec(g, *d) },
            Group::Heisenberg { d } => {
                let (x, p, e) = (vec(g, *d), vec(g, *d), vec(g, 1)[0]);
                GroupElement::Heisenberg { x, p, e }
            }
            Group::CorrelatedHeisenberg { c } => {
                let (x, e) = (vec(g, c.d()), vec(g, 1)[0]);
                GroupElement::CorrelatedHeisenberg { x, e }
            }
            Group::Product { factors } => {
                GroupElement::Product { parts: factors.iter().map(|f| f.random_element(g)).collect() }
            }
        }
    }
}

fn negate(g: &GroupElement) -> GroupElement {
    match g {
        GroupElement::Euclidean { t } => GroupElement::Euclidean { t: neg(t) },
        GroupElement::Heisenberg { x, p, e } => GroupElement::Heisenberg { x: neg(x), p: neg(p), e: -e },
        GroupElement::CorrelatedHeisenberg { x, e } => GroupElement::CorrelatedHeisenberg { x: neg(x), e: -e },
        GroupElement::Product { parts } => GroupElement::Product { parts: parts.iter().map(negate).collect() },
    }
}

pub fn group_mul(group: &Group, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    group.mul(a, b)
}

impl GroupElement {
    /// Coordinates in a fixed order: x, p, E for Heisenberg; x, E for the
    /// correlated variant; factors concatenated for products.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            GroupElement::Euclidean { t } => t.clone(),
            GroupElement::Heisenberg { x, p, e } => x.iter().chain(p).copied().chain([*e]).collect(),
            GroupElement::CorrelatedHeisenberg { x, e } => x.iter().copied().chain([*e]).collect(),
            GroupElement::Product { parts } => parts.iter().flat_map(GroupElement::coordinates).collect(),
        }
    }

    fn map_coordinates(&self, f: &mut impl FnMut(usize, f64) -> f64, offset: &mut usize) -> GroupElement {
        let mut next = |v: f64| {
            let r = f(*offset, v);
            *offset += 1;
            r
        };
        match self {
            GroupElement::Euclidean { t } => GroupElement::Euclidean { t: t.iter().map(|&v| next(v)).collect() },
            GroupElement::Heisenberg { x, p, e } => {
                let x = x.iter().map(|&v| next(v)).collect();
                let p = p.iter().map(|&v| next(v)).collect();
                GroupElement::Heisenberg { x, p, e: next(*e) }
            }
            GroupElement::CorrelatedHeisenberg { x, e } => {
                let x = x.iter().map(|&v| next(v)).collect();
                GroupElement::CorrelatedHeisenberg { x, e: next(*e) }
            }
            GroupElement::Product { parts } => {
                GroupElement::Product { parts: parts.iter().map(|q| q.map_coordinates(f, offset)).collect() }
            }
        }
    }

    /// Largest coordinate difference.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        let (a, b) = (self.coordinates(), other.coordinates());
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Coordinatewise equality (−0 equals 0).
    pub fn exactly_equals(&self, other: &GroupElement) -> bool {
        self.coordinates() == other.coordinates()
    }
}

/// The map x ↦ x⁺ of a positivity structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum PositivePart {
    /// Componentwise on ℝ^d. On the Heisenberg variants the central
    /// coordinate is corrected so that (x⁻)⁻¹x⁺ = x:
    /// H_d: E ↦ (E − κ)⁺ with κ = ½(⟨p⁺, x⁻⟩ − ⟨p⁻, x⁺⟩);
    /// H_{d,C}: E ↦ (E + ⟨Cx⁻, x⁺⟩)⁺.
    Canonical,
    /// Every coordinate, including E, replaced by its positive part.
    Componentwise,
    /// Mutation: x⁺ := x.
    Identity,
    /// Mutation: canonical map with `amount` added to one flattened coordinate.
    Shift { coordinate: usize, amount: f64 },
    /// Mutation: canonical map scaled by `factor`.
    Scale { factor: f64 },
    /// One map per factor of a product group.
    Product { maps: Vec<PositivePart> },
}

impl PositivePart {
    /// A mutation of the canonical map chosen from `seed`.
    pub fn seeded_mutation(group: &Group, seed: u64) -> PositivePart {
        let mut g = rng(mix_seed(seed, 0x6d7574));
        match g.random_range(0..3) {
            0 => PositivePart::Identity,
            1 => PositivePart::Shift {
                coordinate: g.random_range(0..group.coordinate_count()),
                amount: g.random_range(0.01..1.0),
            },
            _ => PositivePart::Scale { factor: g.random_range(1.01..2.0) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityStructure {
    pub group: Group,
    pub map: PositivePart,
}

impl PositivityStructure {
    pub fn canonical(group: Group) -> Self {
        Self { group, map: PositivePart::Canonical }
    }

    pub fn positive_part(&self, g: &GroupElement) -> Result<GroupElement> {
        self.group.check(g)?;
        apply_map(&self.group, &self.map, g)
    }

    /// x⁻ = (x⁻¹)⁺.
    pub fn negative_part(&self, g: &GroupElement) -> Result<GroupElement> {
        self.positive_part(&self.group.inverse(g)?)
    }
}

fn canonical_part(group: &Group, g: &GroupElement) -> Result<GroupElement> {
    let plus = |v: &[f64]| v.iter().map(|&x| pos(x)).collect::<Vec<f64>>();
    let minus = |v: &[f64]| v.iter().map(|&x| pos(-x)).collect::<Vec<f64>>();
    Ok(match (group, g) {
        (Group::Euclidean { .. }, GroupElement::Euclidean { t }) => GroupElement::Euclidean { t: plus(t) },
        (Group::Heisenberg { .. }, GroupElement::Heisenberg { x, p, e }) => {
            let kappa = 0.5 * (dot(&plus(p), &minus(x)) - dot(&minus(p), &plus(x)));
            GroupElement::Heisenberg { x: plus(x), p: plus(p), e: pos(e - kappa) }
        }
        (Group::CorrelatedHeisenberg { c }, GroupElement::CorrelatedHeisenberg { x, e }) => {
            let (xp, xm) = (plus(x), minus(x));
            GroupElement::CorrelatedHeisenberg { e: pos(e + c.form(&xm, &xp)), x: xp }
        }
        (Group::Product { factors }, GroupElement::Product { parts }) => GroupElement::Product {
            parts: factors.iter().zip(parts).map(|(f, p)| canonical_part(f, p)).collect::<Result<_>>()?,
        },
        _ => return Err(Error::ShapeMismatch("element does not belong to group".into())),
    })
}

fn apply_map(group: &Group, map: &PositivePart, g: &GroupElement) -> Result<GroupElement> {
    match map {
        PositivePart::Canonical => canonical_part(group, g),
        PositivePart::Componentwise => Ok(g.map_coordinates(&mut |_, v| pos(v), &mut 0)),
        PositivePart::Identity => Ok(g.clone()),
        PositivePart::Shift { coordinate, amount } => {
            let base = canonical_part(group, g)?;
            Ok(base.map_coordinates(&mut |i, v| if i == *coordinate { v + amount } else { v }, &mut 0))
        }
        PositivePart::Scale { factor } => {
            let base = canonical_part(group, g)?;
            Ok(base.map_coordinates(&mut |_, v| v * factor, &mut 0))
        }
        PositivePart::Product { maps } => match (group, g) {
            (Group::Product { factors }, GroupElement::Product { parts }) if maps.len() == factors.len() => {
                Ok(GroupElement::Product {
                    parts: factors
                        .iter()
                        .zip(maps)
                        .zip(parts)
                        .map(|((f, m), p)| apply_map(f, m, p))
                        .collect::<Result<_>>()?,
                })
            }
            _ => Err(Error::InvalidParameter("product map needs a product group with one map per factor".into())),
        },
    }
}

pub fn positive_part(ps: &PositivityStructure, g: &GroupElement) -> Result<GroupElement> {
    ps.positive_part(g)
}

/// Failure count and first failing sample per axiom.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomTally {
    pub failures: usize,
    pub worst_residual: f64,
    pub witness: Option<GroupElement>,
}

impl AxiomTally {
    fn record(&mut self, ok: bool, residual: f64, x: &GroupElement) {
        if !ok {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(x.clone());
            }
        }
        if residual > self.worst_residual {
            self.worst_residual = residual;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomsReport {
    pub samples: usize,
    pub seed: u64,
    /// e⁺ = e.
    pub identity: AxiomTally,
    /// (x⁺)⁺ = x⁺.
    pub idempotent: AxiomTally,
    /// (x⁻)⁻¹x⁺ = x to 1e−12 per coordinate.
    pub representation: AxiomTally,
    /// x⁺⁻ = e.
    pub plus_minus: AxiomTally,
    /// x⁺ lies in the submonoid.
    pub membership: AxiomTally,
    pub all_pass: bool,
}

pub const REPRESENTATION_TOL: f64 = 1e-12;

/// Checks axioms (i)–(iii), x⁺⁻ = e, and membership of x⁺ on random elements.
pub fn axioms_check(ps: &PositivityStructure, samples: usize, seed: u64) -> Result<AxiomsReport> {
    let group = &ps.group;
    let e = group.identity();
    let mut identity = AxiomTally::default();
    let ep = ps.positive_part(&e)?;
    identity.record(ep.exactly_equals(&e), ep.distance(&e), &e);

    let mut idempotent = AxiomTally::default();
    let mut representation = AxiomTally::default();
    let mut plus_minus = AxiomTally::default();
    let mut membership = AxiomTally::default();
    let mut g = rng(seed);
    for _ in 0..samples {
        let x = group.random_element(&mut g);
        let xp = ps.positive_part(&x)?;
        let xpp = ps.positive_part(&xp)?;
        idempotent.record(xpp.exactly_equals(&xp), xpp.distance(&xp), &x);

        let xm = ps.negative_part(&x)?;
        let rebuilt = group.mul(&group.inverse(&xm)?, &xp)?;
        let r = rebuilt.distance(&x);
        representation.record(r <= REPRESENTATION_TOL, r, &x);

        let xpm = ps.negative_part(&xp)?;
        plus_minus.record(xpm.exactly_equals(&e), xpm.distance(&e), &x);

        membership.record(group.in_submonoid(&xp), 0.0, &x);
    }
    let all_pass = [&identity, &idempotent, &representation, &plus_minus, &membership].iter().all(|t| t.failures == 0);
    Ok(AxiomsReport { samples, seed, identity, idempotent, representation, plus_minus, membership, all_pass })
}

/// Open box inside U ∩ M for U = (−ε, ε)^n, with its Lebesgue measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EJointWitness {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub measure: f64,
}

impl EJointWitness {
    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.lower.len()
            && coords.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&lo, &hi))| v > lo && v < hi)
    }
}

pub fn e_joint_witness(group: &Group, epsilon: f64) -> Result<EJointWitness> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let (lower, upper): (Vec<f64>, Vec<f64>) = match group {
        Group::Euclidean { d } => (vec![0.0; *d], vec![epsilon; *d]),
        Group::Heisenberg { d } => {
            let mut lo = vec![0.0; 2 * d];
            lo.push(-epsilon);
            (lo, vec![epsilon; 2 * d + 1])
        }
        Group::CorrelatedHeisenberg { c } => {
            let mut lo = vec![0.0; c.d()];
            lo.push(-epsilon);
            (lo, vec![epsilon; c.d() + 1])
        }
        Group::Product { factors } => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for f in factors {
                let w = e_joint_witness(f, epsilon)?;
                lo.extend(w.lower);
                hi.extend(w.upper);
            }
            (lo, hi)
        }
    };
    let measure = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
    Ok(EJointWitness { lower, upper, measure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn heis(x: &[f64], p: &[f64], e: f64) -> GroupElement {
        GroupElement::Heisenberg { x: x.to_vec(), p: p.to_vec(), e }
    }

    fn structures() -> Vec<PositivityStructure> {
        let mut g = rng(4);
        let mut out = Vec::new();
        for d in 1..=4 {
            out.push(PositivityStructure::canonical(Group::Euclidean { d }));
        }
        for d in 1..=3 {
            out.push(PositivityStructure::canonical(Group::Heisenberg { d }));
            out.push(PositivityStructure::canonical(Group::CorrelatedHeisenberg { c: Correlation::random(&mut g, d, 2.0) }));
        }
        out.push(PositivityStructure::canonical(Group::Product {
            factors: vec![Group::Heisenberg { d: 1 }, Group::CorrelatedHeisenberg { c: Correlation::random(&mut g, 2, 1.0) }],
        }));
        out
    }

    #[test]
    fn group_law_examples() {
        let h = Group::Heisenberg { d: 1 };
        let a = heis(&[1.0], &[2.0], 3.0);
        assert_eq!(h.mul(&a, &h.identity()).unwrap(), a);
        assert!(h.mul(&a, &h.inverse(&a).unwrap()).unwrap().exactly_equals(&h.identity()));
        let b = heis(&[0.5], &[-1.0], 0.0);
        // E + E′ + ½(⟨p, x′⟩ − ⟨p′, x⟩) = 3 + ½(1 + 1)
        assert_eq!(h.mul(&a, &b).unwrap(), heis(&[1.5], &[1.0], 4.0));
        let c0 = Group::CorrelatedHeisenberg { c: Correlation::zero(1) };
        let u = GroupElement::CorrelatedHeisenberg { x: vec![1.5], e: -1.0 };
        let v = GroupElement::CorrelatedHeisenberg { x: vec![2.0], e: 4.0 };
        assert_eq!(c0.mul(&u, &v).unwrap(), GroupElement::CorrelatedHeisenberg { x: vec![3.5], e: 3.0 });
        assert!(h.mul(&a, &u).is_err());
    }

    #[test]
    fn correlated_law_matches_embedding_in_heisenberg() {
        // (x, E) ↦ (x, Cx, E) is a homomorphism into H_d.
        let mut g = rng(1);
        let corr = Correlation::random(&mut g, 3, 1.5);
        let hc = Group::CorrelatedHeisenberg { c: corr.clone() };
        let hd = Group::Heisenberg { d: 3 };
        let embed = |el: &GroupElement| match el {
            GroupElement::CorrelatedHeisenberg { x, e } => {
                let cx: Vec<f64> = (0..3).map(|i| (0..3).map(|j| corr.entry(i, j) * x[j]).sum()).collect();
                heis(x, &cx, *e)
            }
            _ => unreachable!(),
        };
        for _ in 0..100 {
            let (a, b) = (hc.random_element(&mut g), hc.random_element(&mut g));
            let lhs = embed(&hc.mul(&a, &b).unwrap());
            let rhs = hd.mul(&embed(&a), &embed(&b)).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn positive_part_examples() {
        let eu = PositivityStructure::canonical(Group::Euclidean { d: 2 });
        let r = eu.positive_part(&GroupElement::Euclidean { t: vec![-1.0, 2.0] }).unwrap();
        assert_eq!(r, GroupElement::Euclidean { t: vec![0.0, 2.0] });
        let h1 = PositivityStructure { group: Group::Heisenberg { d: 1 }, map: PositivePart::Componentwise };
        assert_eq!(h1.positive_part(&heis(&[-1.0], &[2.0], -3.0)).unwrap(), heis(&[0.0], &[2.0], 0.0));
        for ps in structures() {
            let e = ps.group.identity();
            assert!(ps.positive_part(&e).unwrap().exactly_equals(&e));
        }
    }

    #[test]
    fn canonical_structures_satisfy_axioms() {
        for ps in structures() {
            let rep = axioms_check(&ps, 1000, 17).unwrap();
            assert!(rep.all_pass, "{:?}: {rep:?}", ps.group);
        }
    }

    #[test]
    fn componentwise_heisenberg_map_breaks_representation() {
        // x = (1, 0, 0), p = (0, 1, ...) style elements with mixed signs expose
        // the ½(⟨p⁺, x⁻⟩ − ⟨p⁻, x⁺⟩) defect.
        let ps = PositivityStructure { group: Group::Heisenberg { d: 1 }, map: PositivePart::Componentwise };
        let x = heis(&[-1.0], &[2.0], 0.5);
        let xm = ps.negative_part(&x).unwrap();
        let xp = ps.positive_part(&x).unwrap();
        let rebuilt = ps.group.mul(&ps.group.inverse(&xm).unwrap(), &xp).unwrap();
        assert!((rebuilt.distance(&x) - 1.0).abs() < 1e-15);
        let rep = axioms_check(&ps, 1000, 3).unwrap();
        assert!(rep.representation.failures > 0 && rep.identity.failures == 0 && rep.idempotent.failures == 0);
        // On ℝ^d the literal map is the canonical one.
        let eu = PositivityStructure { group: Group::Euclidean { d: 3 }, map: PositivePart::Componentwise };
        assert!(axioms_check(&eu, 1000, 3).unwrap().all_pass);
    }

    #[test]
    fn identity_mutation_doubles() {
        let ps = PositivityStructure { group: Group::Euclidean { d: 2 }, map: PositivePart::Identity };
        let x = GroupElement::Euclidean { t: vec![-1.0, 0.5] };
        let xm = ps.negative_part(&x).unwrap();
        let rebuilt = ps.group.mul(&ps.group.inverse(&xm).unwrap(), &ps.positive_part(&x).unwrap()).unwrap();
        assert_eq!(rebuilt, GroupElement::Euclidean { t: vec![-2.0, 1.0] });
        assert!(!axioms_check(&ps, 100, 1).unwrap().all_pass);
    }

    #[test]
    fn every_seeded_mutation_is_detected() {
        for ps in structures() {
            for seed in 0..20 {
                let map = PositivePart::seeded_mutation(&ps.group, seed);
                let m = PositivityStructure { group: ps.group.clone(), map: map.clone() };
                assert!(!axioms_check(&m, 200, seed).unwrap().all_pass, "{map:?} on {:?}", ps.group);
            }
        }
    }

    #[test]
    fn e_joint_examples() {
        let w = e_joint_witness(&Group::Euclidean { d: 1 }, 0.5).unwrap();
        assert_eq!((w.lower.clone(), w.upper.clone(), w.measure), (vec![0.0], vec![0.5], 0.5));
        assert_eq!(e_joint_witness(&Group::Heisenberg { d: 1 }, 1.0).unwrap().measure, 2.0);
        let tiny = e_joint_witness(&Group::Heisenberg { d: 2 }, 1e-3).unwrap().measure;
        assert!(tiny > 0.0 && tiny < 1e-12);
        assert!(e_joint_witness(&Group::Euclidean { d: 1 }, 0.0).is_err());
        // Points of the box lie in M and in (−ε, ε)^n.
        let mut g = rng(2);
        let group = Group::CorrelatedHeisenberg { c: Correlation::random(&mut g, 2, 1.0) };
        let w = e_joint_witness(&group, 0.25).unwrap();
        for _ in 0..100 {
            let u: Vec<f64> = w.lower.iter().zip(&w.upper).map(|(a, b)| g.random_range(*a..*b)).collect();
            let el = GroupElement::CorrelatedHeisenberg { x: u[..2].to_vec(), e: u[2] };
            assert!(group.in_submonoid(&el) && u.iter().all(|v| v.abs() < 0.25) && w.contains(&u));
        }
    }

    #[test]
    fn correlation_validation() {
        assert!(Correlation::from_upper(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).is_ok());
        assert!(Correlation::from_upper(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        let c = Correlation::from_upper(vec![vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!((c.entry(0, 1), c.entry(1, 0)), (2.0, -2.0));
        let s = serde_json::to_string(&Group::CorrelatedHeisenberg { c }).unwrap();
        let back: Group = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn associativity(seed in 0u64..10_000, which in 0usize..8) {
            let group = structures()[which].group.clone();
            let mut g = rng(seed);
            let (a, b, c) = (group.random_element(&mut g), group.random_element(&mut g), group.random_element(&mut g));
            let l = group.mul(&group.mul(&a, &b).unwrap(), &c).unwrap();
            let r = group.mul(&a, &group.mul(&b, &c).unwrap()).unwrap();
            let scale = 1.0 + a.coordinates().iter().chain(&b.coordinates()).chain(&c.coordinates()).map(|v| v * v).sum::<f64>();
            prop_assert!(l.distance(&r) <= 1e-12 * scale);
        }

        #[test]
        fn submonoid_closed_and_images_inside(seed in 0u64..10_000, which in 0usize..11) {
            let ps = &structures()[which];
            let mut g = rng(seed);
            let a = ps.positive_part(&ps.group.random_element(&mut g)).unwrap();
            let b = ps.positive_part(&ps.group.random_element(&mut g)).unwrap();
            prop_assert!(ps.group.in_submonoid(&a) && ps.group.in_submonoid(&b));
            prop_assert!(ps.group.in_submonoid(&ps.group.mul(&a, &b).unwrap()));
        }
    }
}
