//! Dissipation operators D_K, complete dissipativity, regular polynomial
//! evaluation at semigroup values, p_K positivity scans and the transfer of
//! positivity to approximants.

pub mod poly;
pub mod torus;

pub use poly::{p_k_polynomial, p_k_product_form, partition_pairs, regular_poly_eval, LaurentPolynomial, RegularEvaluator};
pub use torus::{torus_sup, torus_sup_with, TorusSup, TorusSupOptions};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximants::{approximant_evaluate, ApproximantKind};
use crate::error::{Error, Result};
use crate::linalg::{c, is_positive_semidefinite, operator_norm, ComplexMatrix, ExponentialTable, PsdVerdict};
use crate::parallel::map_indexed;
use crate::random::{complex_normal, mix_seed, rng};
use crate::semigroup::{evaluate, CommutingFamily};
use crate::stochastic::{require_mc_admissible, sample, MatrixAccumulator, ROUNDING_FLOOR};
use crate::subset::Subset;

/// Largest family for which the 2^d ordered generator products are tabulated.
const PRODUCT_TABLE_MAX_D: usize = 12;

/// Ordered products ∏_{i∈S} A_i for every S ⊆ {0..d}.
fn product_table(fam: &CommutingFamily) -> Vec<ComplexMatrix> {
    let d = fam.d();
    let mut table: Vec<ComplexMatrix> = Vec::with_capacity(1 << d);
    table.push(ComplexMatrix::identity(fam.dim()));
    for s in 1u32..(1 << d) {
        let top = 31 - s.leading_zeros() as usize;
        let rest = s & !(1 << top);
        let m = &table[rest as usize] * fam.generator(top).matrix();
        table.push(m);
    }
    table
}

fn dissipation_from(k: Subset, product: &dyn Fn(Subset) -> ComplexMatrix) -> ComplexMatrix {
    let mut acc: Option<ComplexMatrix> = None;
    for (c1, c2) in partition_pairs(k) {
        let term = &product(c1).adjoint() * &product(c2);
        match acc.as_mut() {
            Some(a) => *a += &term,
            None => acc = Some(term),
        }
    }
    let sign = (-0.5f64).powi(k.len() as i32);
    acc.expect("at least one partition pair").scale_real(sign)
}

/// D_K = (−1/2)^{|K|} Σ_{(C₁,C₂)⊢K} (∏_{C₁}A_i)* ∏_{C₂}A_j.
pub fn dissipation_operator(fam: &CommutingFamily, k: Subset) -> Result<ComplexMatrix> {
    k.check_within(fam.d())?;
    Ok(dissipation_from(k, &|s| fam.generator_product(s)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub subset: Subset,
    pub verdict: PsdVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub d: usize,
    pub tol: f64,
    /// One entry per K ⊆ {1..d}, in bitmask order.
    pub orders: Vec<OrderVerdict>,
    pub all_pass: bool,
    /// Subset with the most negative relative minimum eigenvalue, if any fails.
    pub witness: Option<OrderVerdict>,
}

impl DissipativityReport {
    pub fn verdict(&self, k: Subset) -> Option<&PsdVerdict> {
        self.orders.iter().find(|o| o.subset == k).map(|o| &o.verdict)
    }
}

/// PSD verdict of D_K for all 2^d subsets; overall verdict is the conjunction.
pub fn complete_dissipativity_report(fam: &CommutingFamily, tol: f64) -> Result<DissipativityReport> {
    let d = fam.d();
    let table = (d <= PRODUCT_TABLE_MAX_D).then(|| product_table(fam));
    let product = |s: Subset| match &table {
        Some(t) => t[s.0 as usize].clone(),
        None => fam.generator_product(s),
    };
    let subsets: Vec<Subset> = Subset::all(d).collect();
    let verdicts = map_indexed(subsets.len(), |i| is_positive_semidefinite(&dissipation_from(subsets[i], &product), tol));
    let mut orders = Vec::with_capacity(subsets.len());
    for (k, v) in subsets.into_iter().zip(verdicts) {
        orders.push(OrderVerdict { subset: k, verdict: v? });
    }
    let all_pass = orders.iter().all(|o| o.verdict.is_psd);
    let witness = orders
        .iter()
        .filter(|o| !o.verdict.is_psd)
        .min_by(|a, b| relative_min(&a.verdict).total_cmp(&relative_min(&b.verdict)))
        .cloned();
    Ok(DissipativityReport { d, tol, orders, all_pass, witness })
}

fn relative_min(v: &PsdVerdict) -> f64 {
    v.min_eigenvalue / v.scale.max(1.0)
}

/// Outcome of ‖p(T(t))‖ ≤ sup_𝕋 |p|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub t: Vec<f64>,
    pub norm: f64,
    pub sup_estimate: f64,
    pub sup_upper: f64,
    /// norm ≤ sup_upper + tol.
    pub passes: bool,
}

impl BoundCheck {
    /// A violation that survives even the grid estimate of the sup is
    /// certified; one between estimate and upper bound is not.
    pub fn margin(&self) -> f64 {
        self.sup_upper - self.norm
    }
}

pub fn regular_polynomial_bound_check(
    fam: &CommutingFamily,
    t: &[f64],
    p: &LaurentPolynomial,
    tol: f64,
) -> Result<BoundCheck> {
    let sup = torus_sup_with(p, TorusSupOptions::for_dimension(p.d()))?;
    regular_polynomial_bound_check_with_sup(fam, t, p, &sup, tol)
}

/// As [`regular_polynomial_bound_check`] with a precomputed torus sup.
pub fn regular_polynomial_bound_check_with_sup(
    fam: &CommutingFamily,
    t: &[f64],
    p: &LaurentPolynomial,
    sup: &TorusSup,
    tol: f64,
) -> Result<BoundCheck> {
    let ops = semigroup_values(fam, t)?;
    let norm = operator_norm(&regular_poly_eval(p, &ops)?);
    Ok(BoundCheck {
        t: t.to_vec(),
        norm,
        sup_estimate: sup.estimate,
        sup_upper: sup.upper_bound,
        passes: norm <= sup.upper_bound + tol,
    })
}

fn semigroup_values(fam: &CommutingFamily, t: &[f64]) -> Result<Vec<ComplexMatrix>> {
    if t.len() != fam.d() {
        return Err(Error::ShapeMismatch(format!("{} times for {} generators", t.len(), fam.d())));
    }
    fam.generators().iter().zip(t).map(|(g, &ti)| evaluate(g, ti)).collect()
}

/// {0, 2^{-10}, 2^{-9}, …, 2^4}.
pub fn geometric_t_axis() -> Vec<f64> {
    std::iter::once(0.0).chain((-10..=4).map(|k| 2f64.powi(k))).collect()
}

pub const MAX_GRID_POINTS: usize = 10_000;

/// Cartesian product axis^d. If that exceeds `max_points`, the axis is
/// thinned evenly (keeping 0 and its smallest positive value) until it fits.
pub fn product_grid(axis: &[f64], d: usize, max_points: usize) -> Result<Vec<Vec<f64>>> {
    if axis.is_empty() || d == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut m = axis.len();
    while m > 1 && (m as f64).powi(d as i32) > max_points as f64 {
        m -= 1;
    }
    if (m as f64).powi(d as i32) > max_points as f64 {
        return Err(Error::InvalidParameter(format!("a {d}-dimensional grid cannot fit in {max_points} points")));
    }
    let picked: Vec<f64> = if m == axis.len() {
        axis.to_vec()
    } else if m == 1 {
        vec![axis[0]]
    } else {
        let step = (axis.len() - 1) as f64 / (m - 1) as f64;
        (0..m).map(|j| axis[if j == 1 { 1 } else { (j as f64 * step).round() as usize }]).collect()
    };
    let total = m.pow(d as u32);
    Ok((0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let v = picked[idx % m];
                    idx /= m;
                    v
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkCell {
    pub subset: Subset,
    pub t: Vec<f64>,
    pub verdict: PsdVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkScan {
    pub tol: f64,
    pub points: usize,
    /// Cells sorted by (t index, K).
    pub cells: Vec<PkCell>,
    pub all_pass: bool,
    /// Failing cell with the most negative relative minimum eigenvalue.
    pub witness: Option<PkCell>,
}

/// PSD verdict of p_K(T_1(t_1), …, T_d(t_d)) for every nonempty K and grid point.
pub fn pk_positivity_scan(fam: &CommutingFamily, t_grid: &[Vec<f64>], tol: f64) -> Result<PkScan> {
    let d = fam.d();
    let ks: Vec<Subset> = Subset::all(d).filter(|k| !k.is_empty()).collect();
    let polys = ks.iter().map(|&k| p_k_polynomial(k, d)).collect::<Result<Vec<_>>>()?;
    // e^{t A_i} once per distinct (i, t_i).
    let mut axis_values: Vec<Vec<(f64, ComplexMatrix)>> = vec![Vec::new(); d];
    for t in t_grid {
        if t.len() != d {
            return Err(Error::ShapeMismatch(format!("grid point of length {} for {d} generators", t.len())));
        }
        for (i, &ti) in t.iter().enumerate() {
            if !axis_values[i].iter().any(|(s, _)| *s == ti) {
                axis_values[i].push((ti, evaluate(fam.generator(i), ti)?));
            }
        }
    }
    let lookup = |i: usize, ti: f64| -> &ComplexMatrix {
        &axis_values[i].iter().find(|(s, _)| *s == ti).expect("tabulated").1
    };
    let per_point = map_indexed(t_grid.len(), |pi| -> Result<Vec<PkCell>> {
        let t = &t_grid[pi];
        let ops: Vec<ComplexMatrix> = (0..d).map(|i| lookup(i, t[i]).clone()).collect();
        let mut ev = RegularEvaluator::new(&ops)?;
        let mut out = Vec::with_capacity(ks.len());
        for (k, p) in ks.iter().zip(&polys) {
            let m = ev.eval(p)?;
            out.push(PkCell { subset: *k, t: t.clone(), verdict: is_positive_semidefinite(&m, tol)? });
        }
        Ok(out)
    });
    let mut cells = Vec::with_capacity(t_grid.len() * ks.len());
    for r in per_point {
        cells.extend(r?);
    }
    let all_pass = cells.iter().all(|c| c.verdict.is_psd);
    let witness = cells
        .iter()
        .filter(|c| !c.verdict.is_psd)
        .min_by(|a, b| relative_min(&a.verdict).total_cmp(&relative_min(&b.verdict)))
        .cloned();
    Ok(PkScan { tol, points: t_grid.len(), cells, all_pass, witness })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub poly: LaurentPolynomial,
    pub self_adjoint: bool,
}

/// Polynomials in d variables used for bound checks and transfer:
/// 1, X_i^{±1}, X_iX_j^{±1}, p_K, 1 − 4^{−|K|}p_K, and seeded random
/// self-adjoint polynomials of absolute degree 1.
pub fn polynomial_corpus(d: usize, seed: u64) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    let mut push = |name: String, poly: LaurentPolynomial| {
        let self_adjoint = poly.is_self_adjoint();
        out.push(CorpusEntry { name, poly, self_adjoint });
    };
    push("1".into(), LaurentPolynomial::one(d));
    for i in 0..d {
        push(format!("X{}", i + 1), LaurentPolynomial::variable(d, i, 1));
        push(format!("X{}^-1", i + 1), LaurentPolynomial::variable(d, i, -1));
        for j in i + 1..d {
            for s in [1, -1] {
                let mut e = vec![0; d];
                e[i] = 1;
                e[j] = s;
                push(format!("X{}X{}^{s}", i + 1, j + 1), LaurentPolynomial::monomial(e, c(1.0, 0.0)));
            }
        }
    }
    for k in Subset::all(d).filter(|k| !k.is_empty()) {
        let p = p_k_polynomial(k, d)?;
        let scaled = p.scale(c(-(4f64.powi(-(k.len() as i32))), 0.0));
        push(format!("p_{k}"), p);
        push(format!("1-p_{k}/4^{}", k.len()), LaurentPolynomial::one(d).add(&scaled));
    }
    let mut g = rng(mix_seed(seed, 0x706f6c79));
    for r in 0..4 {
        let mut p = LaurentPolynomial::zero(d);
        let mut mass = 0.0;
        for _ in 0..3 {
            let e: Vec<i32> = (0..d).map(|_| g.random_range(-1..=1)).collect();
            if e.iter().all(|&x| x == 0) {
                continue;
            }
            let z = complex_normal(&mut g);
            let neg: Vec<i32> = e.iter().map(|x| -x).collect();
            p.add_term(e, z);
            p.add_term(neg, z.conj());
            mass += 2.0 * z.norm();
        }
        // Constant term between half and one-and-a-half times the other mass,
        // so some members are positive on contractions and some are not.
        let c0 = mass * g.random_range(0.5..1.5);
        p.add_term(vec![0; d], c(c0.max(0.1), 0.0));
        push(format!("random{r}"), p);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferPoint {
    pub t: Vec<f64>,
    /// Min eigenvalue of p(T(t)).
    pub base_min_eig: f64,
    pub base_psd: bool,
    /// Min eigenvalue of p(T^{(λ)}(t)).
    pub approx_min_eig: f64,
    pub approx_psd: bool,
    /// ‖p(T^{(λ)}(t)) − MC mean‖ and the MC standard error.
    pub mc_deviation: f64,
    pub mc_std_error: f64,
    pub mc_within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub kinds: Vec<ApproximantKind>,
    pub points: Vec<TransferPoint>,
    /// p(T(t)) ⪰ 0 on the whole grid.
    pub base_psd_on_grid: bool,
    /// base PSD on the grid ⇒ approximant PSD on the grid.
    pub implication_holds: bool,
    pub mc_ok: bool,
}

/// Transfer of positivity from p(T(t)) to p(T^{(λ)}(t)) for absolute degree
/// ≤ 1, with the expectation identity p(T^{(λ)}(t)) = E[p(T_1(θ_1), …)] for
/// independent θ_i ~ Γ_i(t_i) checked by Monte Carlo at every grid point.
#[allow(clippy::too_many_arguments)]
pub fn transfer_check(
    fam: &CommutingFamily,
    kinds: &[ApproximantKind],
    p: &LaurentPolynomial,
    t_grid: &[Vec<f64>],
    n: usize,
    seed: u64,
    tol: f64,
    sigmas: f64,
) -> Result<TransferReport> {
    let d = fam.d();
    if p.absolute_degree() > 1 {
        return Err(Error::InvalidParameter(format!(
            "transfer identity needs absolute degree <= 1, got {}",
            p.absolute_degree()
        )));
    }
    if kinds.len() != d || p.d() != d {
        return Err(Error::ShapeMismatch(format!("{} kinds and {}-variable polynomial for {d} generators", kinds.len(), p.d())));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs n >= 2".into()));
    }
    for (g, k) in fam.generators().iter().zip(kinds) {
        k.validate_for(g)?;
        require_mc_admissible(g, k.law())?;
    }
    let dim = fam.dim();
    let mut points = Vec::with_capacity(t_grid.len());
    for (pi, t) in t_grid.iter().enumerate() {
        let base = regular_poly_eval(p, &semigroup_values(fam, t)?)?;
        let base_v = is_positive_semidefinite(&base, tol)?;
        let approx_ops = fam
            .generators()
            .iter()
            .zip(kinds)
            .zip(t)
            .map(|((g, k), &ti)| approximant_evaluate(g, *k, ti))
            .collect::<Result<Vec<_>>>()?;
        let exact = regular_poly_eval(p, &approx_ops)?;
        let approx_v = is_positive_semidefinite(&exact, tol)?;

        let point_seed = mix_seed(seed, pi as u64);
        let mut thetas = Vec::with_capacity(d);
        let mut tables = Vec::with_capacity(d);
        for (i, ((g, k), &ti)) in fam.generators().iter().zip(kinds).zip(t).enumerate() {
            let batch = sample(k.law(), ti, n, mix_seed(point_seed, i as u64))?;
            let max = batch.values.iter().copied().fold(0.0, f64::max);
            tables.push(ExponentialTable::new(g.matrix(), max)?);
            thetas.push(batch.values);
        }
        let chunks = n.div_ceil(crate::stochastic::CHUNK);
        let parts = map_indexed(chunks, |ci| -> Result<MatrixAccumulator> {
            let mut acc = MatrixAccumulator::new(dim);
            let lo = ci * crate::stochastic::CHUNK;
            let hi = (lo + crate::stochastic::CHUNK).min(n);
            for s in lo..hi {
                let ops = (0..d).map(|i| tables[i].eval(thetas[i][s])).collect::<Result<Vec<_>>>()?;
                acc.push(&regular_poly_eval(p, &ops)?);
            }
            Ok(acc)
        });
        let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
        let est = crate::parallel::tree_reduce(parts, MatrixAccumulator::merge).expect("n >= 2").finish();
        let dev = est.deviation(&exact);
        points.push(TransferPoint {
            t: t.clone(),
            base_min_eig: base_v.min_eigenvalue,
            base_psd: base_v.is_psd,
            approx_min_eig: approx_v.min_eigenvalue,
            approx_psd: approx_v.is_psd,
            mc_deviation: dev,
            mc_std_error: est.std_error,
            mc_within: dev <= sigmas * est.std_error + ROUNDING_FLOOR * (1.0 + operator_norm(&exact)),
        });
    }
    let base_psd_on_grid = points.iter().all(|q| q.base_psd);
    let implication_holds = !base_psd_on_grid || points.iter().all(|q| q.approx_psd);
    let mc_ok = points.iter().all(|q| q.mc_within);
    Ok(TransferReport { kinds: kinds.to_vec(), points, base_psd_on_grid, implication_holds, mc_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximants::{approximant_family, hille_generator};
    use crate::counterexample::build_counterexample;
    use crate::linalg::C64;
    use crate::random::random_dissipative;
    use crate::semigroup::BoundedGenerator;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn tensor_pair(seed: u64) -> CommutingFamily {
        let mut g = rng(seed);
        let b1 = random_dissipative(&mut g, 2, 1.0, 0.1);
        let b2 = random_dissipative(&mut g, 3, 1.0, 0.1);
        CommutingFamily::from_matrices(vec![b1.kron(&ComplexMatrix::identity(3)), ComplexMatrix::identity(2).kron(&b2)])
            .unwrap()
    }

    /// D_K by recursion over the elements of K (largest index first), carrying
    /// the pair of partial products instead of enumerating bitmasks.
    fn dissipation_recursive(fam: &CommutingFamily, k: Subset) -> ComplexMatrix {
        fn go(fam: &CommutingFamily, rest: &[usize], left: ComplexMatrix, right: ComplexMatrix) -> ComplexMatrix {
            match rest.split_last() {
                None => &left.adjoint() * &right,
                Some((&i, tail)) => {
                    let a = fam.generator(i).matrix();
                    go(fam, tail, a * &left, right.clone()) + go(fam, tail, left, a * &right)
                }
            }
        }
        let id = ComplexMatrix::identity(fam.dim());
        let s = go(fam, &k.indices(), id.clone(), id);
        s.scale_real((-0.5f64).powi(k.len() as i32))
    }

    fn integer_family(seed: u64, d: usize, n: usize) -> CommutingFamily {
        let mut g = rng(seed);
        let mats: Vec<ComplexMatrix> = (0..d)
            .map(|_| ComplexMatrix::from_fn(n, |_, _| c(g.random_range(-3..=3) as f64, g.random_range(-3..=3) as f64)))
            .collect();
        CommutingFamily::with_tolerance(
            mats.into_iter().map(|m| BoundedGenerator::new(m).unwrap()).collect(),
            crate::semigroup::CommutingTolerance::Override,
        )
        .unwrap()
    }

    #[test]
    fn dissipation_examples() {
        let fam = tensor_pair(1);
        assert_eq!(dissipation_operator(&fam, Subset::EMPTY).unwrap(), ComplexMatrix::identity(6));
        let a = fam.generator(0).matrix();
        let d1 = dissipation_operator(&fam, Subset::singleton(0)).unwrap();
        assert!(operator_norm(&(&d1 - &(a + &a.adjoint()).scale_real(-0.5))) < 1e-15);
        let scalar = CommutingFamily::from_matrices(vec![ComplexMatrix::from_diagonal(&[c(-0.5, 3.0), c(0.0, -1.0)])]).unwrap();
        let d = dissipation_operator(&scalar, Subset::singleton(0)).unwrap();
        assert_eq!(d, ComplexMatrix::from_real_diagonal(&[0.5, 0.0]));
        assert!(dissipation_operator(&fam, Subset::singleton(2)).is_err());
    }

    #[test]
    fn enumerations_agree_exactly_on_integer_matrices() {
        for seed in 0..4 {
            let fam = integer_family(seed, 4, 3);
            for k in Subset::all(4) {
                assert_eq!(dissipation_operator(&fam, k).unwrap(), dissipation_recursive(&fam, k), "K={k}");
            }
        }
    }

    #[test]
    fn diagonal_family_is_completely_dissipative() {
        let mut g = rng(5);
        let diags: Vec<Vec<C64>> =
            (0..3).map(|_| (0..4).map(|_| c(-g.random_range(0.0..2.0), g.random_range(-2.0..2.0))).collect()).collect();
        let fam =
            CommutingFamily::from_matrices(diags.iter().map(|d| ComplexMatrix::from_diagonal(d)).collect()).unwrap();
        let rep = complete_dissipativity_report(&fam, 1e-9).unwrap();
        assert!(rep.all_pass && rep.witness.is_none());
        assert_eq!(rep.orders.len(), 8);
        // Diagonal oracle: D_K = diag(∏_{i∈K} (−Re a_i)).
        for o in &rep.orders {
            let expected =
                (0..4).map(|r| o.subset.indices().iter().map(|&i| -diags[i][r].re).product::<f64>()).fold(f64::INFINITY, f64::min);
            assert!((o.verdict.min_eigenvalue - expected).abs() < 1e-12, "K={}", o.subset);
        }
    }

    #[test]
    fn counterexample_fails_only_at_full_set() {
        let fam = build_counterexample(2, 4, 2, 0.8, 3).unwrap();
        let rep = complete_dissipativity_report(&fam, 1e-9).unwrap();
        assert!(!rep.all_pass);
        for o in &rep.orders {
            assert_eq!(o.verdict.is_psd, o.subset != Subset::full(2), "K={}", o.subset);
        }
        let w = rep.witness.unwrap();
        assert_eq!(w.subset, Subset::full(2));
        // 1 − |K|α² with |K| = 2.
        assert!(w.verdict.min_eigenvalue < -1e-6);
        let fam3 = build_counterexample(3, 4, 2, 0.65, 4).unwrap();
        let rep3 = complete_dissipativity_report(&fam3, 1e-9).unwrap();
        for o in &rep3.orders {
            assert_eq!(o.verdict.is_psd, o.subset != Subset::full(3), "K={}", o.subset);
        }
    }

    #[test]
    fn counterexample_schur_complement() {
        // Block form of D_K is [[I, −αW], [−αW*, I + α²W*W − |K|α²I]] with
        // W = Σ_K V_i, so its Schur complement is (1 − |K|α²)I whatever the V_i.
        for (d, alpha, seed) in [(2, 0.8, 3), (3, 0.65, 4), (3, 0.6, 5)] {
            let fam = build_counterexample(d, 4, 2, alpha, seed).unwrap();
            for k in Subset::all(d).filter(|k| !k.is_empty()) {
                let m = dissipation_operator(&fam, k).unwrap();
                let a = m.as_dmatrix();
                let schur = a.view((4, 4), (2, 2)) - a.view((4, 0), (2, 4)) * a.view((0, 4), (4, 2));
                let expected = 1.0 - k.len() as f64 * alpha * alpha;
                let target = nalgebra::DMatrix::<C64>::identity(2, 2) * c(expected, 0.0);
                assert!((schur - target).norm() < 1e-12, "d={d} K={k}");
                assert!((a.view((0, 0), (4, 4)) - nalgebra::DMatrix::<C64>::identity(4, 4)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hille_dissipation_matches_scaled_p_k() {
        let fam = tensor_pair(7);
        let lambdas = [3.0, 11.0];
        let hille = approximant_family(
            &fam,
            &[ApproximantKind::Hille { rate: lambdas[0] }, ApproximantKind::Hille { rate: lambdas[1] }],
        )
        .unwrap();
        assert_eq!(hille.generator(0), &hille_generator(fam.generator(0), 3.0).unwrap());
        let ops: Vec<ComplexMatrix> =
            (0..2).map(|i| evaluate(fam.generator(i), 1.0 / lambdas[i]).unwrap()).collect();
        for k in Subset::all(2) {
            let lhs = dissipation_operator(&hille, k).unwrap();
            let scale: f64 = k.indices().iter().map(|&i| lambdas[i]).product::<f64>() / 2f64.powi(k.len() as i32);
            let rhs = regular_poly_eval(&p_k_polynomial(k, 2).unwrap(), &ops).unwrap().scale_real(scale);
            assert!(operator_norm(&(&lhs - &rhs)) <= 1e-9 * operator_norm(&lhs).max(1.0), "K={k}");
        }
    }

    #[test]
    fn regular_eval_examples() {
        let mut g = rng(2);
        let s1 = crate::random::random_matrix(&mut g, 3, 1.0);
        let s2 = crate::random::random_matrix(&mut g, 3, 1.0);
        let ops = [s1.clone(), s2.clone()];
        assert_eq!(regular_poly_eval(&LaurentPolynomial::one(2), &ops).unwrap(), ComplexMatrix::identity(3));
        assert_eq!(regular_poly_eval(&LaurentPolynomial::variable(2, 0, -1), &ops).unwrap(), s1.adjoint());
        let m = LaurentPolynomial::monomial(vec![-1, 1], c(1.0, 0.0));
        assert_eq!(regular_poly_eval(&m, &ops).unwrap(), &s1.adjoint() * &s2);
    }

    #[test]
    fn bound_checks() {
        let fam = tensor_pair(3);
        let one = regular_polynomial_bound_check(&fam, &[0.4, 1.0], &LaurentPolynomial::one(2), 1e-9).unwrap();
        assert!(one.passes && (one.norm - 1.0).abs() < 1e-12);
        // Skew-adjoint generators: ‖e^{tA}‖ = 1 = sup |X₁|.
        let mut g = rng(8);
        let h = crate::random::random_hermitian(&mut g, 3, 1.0).scale(c(0.0, 1.0));
        let unitary = CommutingFamily::from_matrices(vec![h]).unwrap();
        let chk = regular_polynomial_bound_check(&unitary, &[0.7], &LaurentPolynomial::variable(1, 0, 1), 1e-9).unwrap();
        assert!(chk.passes && (chk.norm - 1.0).abs() < 1e-12 && chk.sup_upper - 1.0 < 1e-12);
    }

    #[test]
    fn counterexample_violates_a_polynomial_bound() {
        let fam = build_counterexample(2, 4, 2, 0.8, 3).unwrap();
        let k = Subset::full(2);
        let q = LaurentPolynomial::one(2).sub(&p_k_polynomial(k, 2).unwrap().scale(c(1.0 / 16.0, 0.0)));
        let sup = torus_sup_with(&q, TorusSupOptions::for_dimension(2)).unwrap();
        let grid = product_grid(&geometric_t_axis(), 2, MAX_GRID_POINTS).unwrap();
        let failing = grid
            .iter()
            .map(|t| regular_polynomial_bound_check_with_sup(&fam, t, &q, &sup, 1e-9).unwrap())
            .filter(|b| !b.passes)
            .count();
        assert!(failing > 0);
    }

    #[test]
    fn grids() {
        let axis = geometric_t_axis();
        assert_eq!(axis.len(), 16);
        assert_eq!((axis[0], axis[1], axis[15]), (0.0, 2f64.powi(-10), 16.0));
        assert_eq!(product_grid(&axis, 3, MAX_GRID_POINTS).unwrap().len(), 4096);
        let g4 = product_grid(&axis, 4, MAX_GRID_POINTS).unwrap();
        assert!(g4.len() <= MAX_GRID_POINTS);
        assert!(g4.iter().any(|t| t.iter().all(|&x| x == 0.0)));
        assert!(g4.iter().any(|t| t.iter().all(|&x| x == 2f64.powi(-10))));
    }

    #[test]
    fn pk_scan_examples() {
        let fam = tensor_pair(2);
        let grid = product_grid(&geometric_t_axis(), 2, MAX_GRID_POINTS).unwrap();
        let scan = pk_positivity_scan(&fam, &grid, 1e-9).unwrap();
        assert!(scan.all_pass);
        assert_eq!(scan.cells.len(), 256 * 3);
        let zero = scan.cells.iter().find(|c| c.t == vec![0.0, 0.0]).unwrap();
        assert!(zero.verdict.min_eigenvalue.abs() < 1e-15);
        let bad = build_counterexample(2, 4, 2, 0.8, 1).unwrap();
        let scan = pk_positivity_scan(&bad, &grid, 1e-9).unwrap();
        assert!(!scan.all_pass);
        let w = scan.witness.unwrap();
        assert_eq!(w.subset, Subset::full(2));
        // Failure already near t = 0.
        assert!(scan.cells.iter().any(|c| !c.verdict.is_psd && c.t.iter().all(|&x| x > 0.0 && x <= 2f64.powi(-8))));
    }

    #[test]
    fn transfer_examples() {
        let fam = tensor_pair(6);
        let kinds = [ApproximantKind::Hille { rate: 4.0 }, ApproximantKind::Yosida { rate: 6.0 }];
        let grid = vec![vec![0.5, 0.5], vec![2.0, 0.25]];
        let one = transfer_check(&fam, &kinds, &LaurentPolynomial::one(2), &grid, 1000, 1, 1e-8, 5.0).unwrap();
        assert!(one.mc_ok && one.implication_holds);
        assert!(one.points.iter().all(|p| p.mc_deviation < 1e-12));
        let pk = p_k_polynomial(Subset::full(2), 2).unwrap();
        let rep = transfer_check(&fam, &kinds, &pk, &grid, 20_000, 2, 1e-8, 5.0).unwrap();
        assert!(rep.base_psd_on_grid && rep.implication_holds && rep.mc_ok, "{rep:?}");
        let deg2 = LaurentPolynomial::variable(2, 0, 2);
        assert!(transfer_check(&fam, &kinds, &deg2, &grid, 100, 1, 1e-8, 5.0).is_err());
    }

    #[test]
    fn corpus_contents() {
        let corpus = polynomial_corpus(2, 1).unwrap();
        assert!(corpus.iter().all(|e| e.poly.absolute_degree() <= 1 || e.name.starts_with("p_")));
        assert!(corpus.iter().filter(|e| e.name.starts_with("random")).all(|e| e.self_adjoint));
        assert!(corpus.iter().any(|e| e.name == "1-p_{1,2}/4^2"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dissipation_is_hermitian(seed in 0u64..1000, kbits in 0u32..8) {
            let mut g = rng(seed);
            let mats: Vec<ComplexMatrix> = (0..3).map(|_| crate::random::random_matrix(&mut g, 3, 2.0)).collect();
            let fam = CommutingFamily::with_tolerance(
                mats.into_iter().map(|m| BoundedGenerator::new(m).unwrap()).collect(),
                crate::semigroup::CommutingTolerance::Override,
            ).unwrap();
            let m = dissipation_operator(&fam, Subset(kbits)).unwrap();
            prop_assert!(operator_norm(&(&m - &m.adjoint())) <= 1e-10 * operator_norm(&m).max(1.0));
        }

        #[test]
        fn degree_one_monomials(e in proptest::collection::vec(-1i32..=1, 3), seed in 0u64..1000) {
            let mut g = rng(seed);
            let ops: Vec<ComplexMatrix> = (0..3).map(|_| crate::random::random_matrix(&mut g, 2, 1.0)).collect();
            let got = regular_poly_eval(&LaurentPolynomial::monomial(e.clone(), c(1.0, 0.0)), &ops).unwrap();
            let mut neg = ComplexMatrix::identity(2);
            let mut pos = ComplexMatrix::identity(2);
            for i in 0..3 {
                if e[i] == -1 { neg = &neg * &ops[i]; }
                if e[i] == 1 { pos = &pos * &ops[i]; }
            }
            prop_assert!(operator_norm(&(&got - &(&neg.adjoint() * &pos))) < 1e-14);
        }
    }
}
