//! Laurent polynomials in d commuting variables and their regular evaluation
//! X^n ↦ (∏_{n_i<0} S_i^{−n_i})* (∏_{n_i>0} S_i^{n_i}).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};
use crate::subset::Subset;

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPolynomial {
    d: usize,
    terms: BTreeMap<Vec<i32>, C64>,
}

impl LaurentPolynomial {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, value: C64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(vec![0; d], value);
        p
    }

    pub fn one(d: usize) -> Self {
        Self::constant(d, c(1.0, 0.0))
    }

    pub fn monomial(exponents: Vec<i32>, coeff: C64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, coeff);
        p
    }

    /// X_i^power.
    pub fn variable(d: usize, i: usize, power: i32) -> Self {
        let mut e = vec![0; d];
        e[i] = power;
        Self::monomial(e, c(1.0, 0.0))
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Vec<i32>, C64)>) -> Result<Self> {
        let mut p = Self::zero(d);
        for (e, z) in terms {
            if e.len() != d {
                return Err(Error::ShapeMismatch(format!("exponent vector of length {} in {d} variables", e.len())));
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite("polynomial coefficient".into()));
            }
            p.add_term(e, z);
        }
        Ok(p)
    }

    pub fn add_term(&mut self, exponents: Vec<i32>, coeff: C64) {
        assert_eq!(exponents.len(), self.d);
        let z = self.terms.get(&exponents).copied().unwrap_or_default() + coeff;
        if z == C64::new(0.0, 0.0) {
            self.terms.remove(&exponents);
        } else {
            self.terms.insert(exponents, z);
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &C64)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exponents: &[i32]) -> C64 {
        self.terms.get(exponents).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// max over terms of max_i |n_i|.
    pub fn absolute_degree(&self) -> u32 {
        self.terms.keys().flat_map(|e| e.iter().map(|x| x.unsigned_abs())).max().unwrap_or(0)
    }

    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().map(|z| z.norm()).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut p = self.clone();
        for (e, z) in &other.terms {
            p.add_term(e.clone(), *z);
        }
        p
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut p = Self::zero(self.d);
        for (e, w) in &self.terms {
            p.add_term(e.clone(), w * z);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut p = Self::zero(self.d);
        for (e1, z1) in &self.terms {
            for (e2, z2) in &other.terms {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, z1 * z2);
            }
        }
        p
    }

    /// Polynomial q̄ with q̄(λ) = conj(q(λ)) on the torus.
    pub fn conj_reflect(&self) -> Self {
        let mut p = Self::zero(self.d);
        for (e, z) in &self.terms {
            p.add_term(e.iter().map(|x| -x).collect(), z.conj());
        }
        p
    }

    /// Real-valued on the torus; regular evaluation at commuting operators is
    /// then Hermitian.
    pub fn is_self_adjoint(&self) -> bool {
        self.conj_reflect() == *self
    }

    /// p(e^{iθ_1}, …, e^{iθ_d}).
    pub fn eval_torus(&self, theta: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, z)| {
                let phase: f64 = e.iter().zip(theta).map(|(&n, &t)| n as f64 * t).sum();
                z * c(0.0, phase).exp()
            })
            .sum()
    }

    /// Embeds into more variables: variable i goes to `positions[i]`.
    pub fn embed(&self, d_new: usize, positions: &[usize]) -> Self {
        let mut p = Self::zero(d_new);
        for (e, z) in &self.terms {
            let mut ne = vec![0; d_new];
            for (i, &pos) in positions.iter().enumerate() {
                ne[pos] = e[i];
            }
            p.add_term(ne, *z);
        }
        p
    }
}

/// 2^{|K|} ordered pairs (C₁, C₂) with C₁ ⊔ C₂ = K, C₁ enumerated by bitmask.
pub fn partition_pairs(k: Subset) -> Vec<(Subset, Subset)> {
    k.subsets().into_iter().map(|c1| (c1, Subset(k.0 & !c1.0))).collect()
}

/// Σ_{(C₁,C₂)⊢K} ∏_{C₁}(1 − X_i⁻¹) ∏_{C₂}(1 − X_j), expanded.
pub fn p_k_polynomial(k: Subset, d: usize) -> Result<LaurentPolynomial> {
    k.check_within(d)?;
    let one = LaurentPolynomial::one(d);
    let mut total = LaurentPolynomial::zero(d);
    for (c1, c2) in partition_pairs(k) {
        let mut term = one.clone();
        for i in c1.indices() {
            term = term.mul(&one.sub(&LaurentPolynomial::variable(d, i, -1)));
        }
        for j in c2.indices() {
            term = term.mul(&one.sub(&LaurentPolynomial::variable(d, j, 1)));
        }
        total = total.add(&term);
    }
    Ok(total)
}

/// ∏_{i∈K}(2 − X_i − X_i⁻¹), expanded.
pub fn p_k_product_form(k: Subset, d: usize) -> Result<LaurentPolynomial> {
    k.check_within(d)?;
    let mut p = LaurentPolynomial::one(d);
    for i in k.indices() {
        let f = LaurentPolynomial::constant(d, c(2.0, 0.0))
            .sub(&LaurentPolynomial::variable(d, i, 1))
            .sub(&LaurentPolynomial::variable(d, i, -1));
        p = p.mul(&f);
    }
    Ok(p)
}

/// Regular evaluation with memoized ordered products ∏_i S_i^{e_i}.
pub struct RegularEvaluator<'a> {
    ops: &'a [ComplexMatrix],
    cache: HashMap<Vec<u32>, ComplexMatrix>,
}

impl<'a> RegularEvaluator<'a> {
    pub fn new(ops: &'a [ComplexMatrix]) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter("no operators".into()));
        }
        let n = ops[0].dim();
        if ops.iter().any(|o| o.dim() != n) {
            return Err(Error::ShapeMismatch("operators have different dimensions".into()));
        }
        Ok(Self { ops, cache: HashMap::new() })
    }

    /// S_1^{e_1} S_2^{e_2} ⋯ S_d^{e_d}.
    pub fn product(&mut self, e: &[u32]) -> ComplexMatrix {
        if let Some(m) = self.cache.get(e) {
            return m.clone();
        }
        let m = match e.iter().rposition(|&x| x > 0) {
            None => ComplexMatrix::identity(self.ops[0].dim()),
            Some(last) => {
                let mut prev = e.to_vec();
                prev[last] -= 1;
                &self.product(&prev) * &self.ops[last]
            }
        };
        self.cache.insert(e.to_vec(), m.clone());
        m
    }

    pub fn monomial(&mut self, n: &[i32]) -> ComplexMatrix {
        let neg: Vec<u32> = n.iter().map(|&x| if x < 0 { x.unsigned_abs() } else { 0 }).collect();
        let pos: Vec<u32> = n.iter().map(|&x| if x > 0 { x as u32 } else { 0 }).collect();
        let has_neg = neg.iter().any(|&x| x > 0);
        let p = self.product(&pos);
        if has_neg {
            &self.product(&neg).adjoint() * &p
        } else {
            p
        }
    }

    pub fn eval(&mut self, p: &LaurentPolynomial) -> Result<ComplexMatrix> {
        if p.d() != self.ops.len() {
            return Err(Error::ShapeMismatch(format!("{}-variable polynomial at {} operators", p.d(), self.ops.len())));
        }
        let mut acc = ComplexMatrix::zeros(self.ops[0].dim());
        for (e, z) in p.terms() {
            let m = self.monomial(e);
            acc.axpy(*z, &m);
        }
        Ok(acc)
    }
}

pub fn regular_poly_eval(p: &LaurentPolynomial, ops: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    RegularEvaluator::new(ops)?.eval(p)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermLiteral {
    exponents: Vec<i32>,
    coeff: [f64; 2],
}

impl Serialize for LaurentPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let lits: Vec<TermLiteral> =
            self.terms.iter().map(|(e, z)| TermLiteral { exponents: e.clone(), coeff: [z.re, z.im] }).collect();
        lits.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lits: Vec<TermLiteral> = Vec::deserialize(d)?;
        let dim = lits.first().map(|t| t.exponents.len()).ok_or_else(|| {
            serde::de::Error::custom("a polynomial literal needs at least one term to fix the variable count")
        })?;
        LaurentPolynomial::from_terms(dim, lits.into_iter().map(|t| (t.exponents, c(t.coeff[0], t.coeff[1]))))
            .map_err(serde::de::Error::custom)
    }
}
