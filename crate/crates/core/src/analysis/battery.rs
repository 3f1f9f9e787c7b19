//! The equivalence battery: every column evaluated on one family, with
//! witnesses for failures and a cross-column agreement check.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::spec::{FamilySpec, FamilySource};
use crate::approximants::{approximant_family, convergence_profile, ApproximantKind, ConvergenceProfile};
use crate::calculus::{euclidean_gram_schedule, gram_scan, GramEntry, SemigroupRepresentation};
use crate::dissipativity::{
    complete_dissipativity_report, pk_positivity_scan, polynomial_corpus, product_grid, torus_sup_with, transfer_check,
    CorpusEntry, LaurentPolynomial, RegularEvaluator, TorusSup, TorusSupOptions,
};
use crate::error::Result;
use crate::linalg::{operator_norm, ComplexMatrix};
use crate::parallel::map_indexed;
use crate::random::mix_seed;
use crate::semigroup::{evaluate, CommutingFamily};
use crate::subset::Subset;
use crate::tolerances::Tolerances;

pub const COMPLETE_DISSIPATIVITY: &str = "complete_dissipativity";
pub const PK_SCAN: &str = "pk_scan";
pub const APPROXIMANTS: &str = "approximants";
pub const POLYNOMIAL_BOUNDS: &str = "polynomial_bounds";
pub const GRAM: &str = "gram";
pub const TRANSFER: &str = "transfer";

/// Columns that decide the equivalence on their own.
pub const COMPUTABLE_COLUMNS: [&str; 3] = [COMPLETE_DISSIPATIVITY, PK_SCAN, APPROXIMANTS];

/// Grid points used by the Monte Carlo transfer column.
const TRANSFER_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Dissipation { subset: Subset, min_eigenvalue: f64 },
    PkPoint { subset: Subset, t: Vec<f64>, min_eigenvalue: f64 },
    Approximant { approximant: String, rate: f64, subset: Subset, min_eigenvalue: f64 },
    Bound { polynomial: String, t: Vec<f64>, norm: f64, sup_upper: f64 },
    Gram { label: String, points: Vec<Vec<f64>>, min_eigenvalue: f64 },
    Transfer { polynomial: String, approximant: String, rate: f64, t: Vec<f64>, detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub d: usize,
    pub dim: usize,
    pub commutator_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub subset: Subset,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximantRow {
    pub approximant: String,
    pub rate: f64,
    pub pass: bool,
    pub worst_subset: Subset,
    pub worst_min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub polynomial: String,
    pub sup_estimate: f64,
    pub sup_upper: f64,
    pub max_norm: f64,
    pub argmax_t: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub polynomial: String,
    pub approximant: String,
    pub rate: f64,
    pub base_psd_on_grid: bool,
    pub implication_holds: bool,
    pub mc_ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDetails {
    pub dissipation: Vec<OrderRow>,
    pub pk_points: usize,
    pub pk_worst_min_eigenvalue: Option<f64>,
    pub approximants: Vec<ApproximantRow>,
    /// Per generator and approximant kind, sup error against e^{tA_i} on the t axis.
    pub convergence: Vec<(usize, ConvergenceProfile)>,
    pub bounds: Vec<BoundRow>,
    pub bound_points: usize,
    pub gram: Vec<GramEntry>,
    pub transfer: Vec<TransferRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// The enabled computable columns carry the same verdict.
    pub computable_columns_agree: bool,
    /// PASS rows pass bounds and Gram; FAIL rows fail Gram.
    pub consistent: bool,
    pub defects: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub subset: Subset,
    pub verdicts: BTreeMap<String, Verdict>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub spec_digest: String,
    pub tool_version: String,
    pub name: String,
    pub family: FamilySummary,
    pub verdicts: BTreeMap<String, Verdict>,
    pub witnesses: BTreeMap<String, Witness>,
    pub details: ReportDetails,
    pub agreement: Agreement,
    /// Proper nonempty subfamilies, when requested.
    pub subsets: Vec<SubsetRow>,
    /// Every proper subfamily all-PASS while the full family fails every computable column.
    pub subset_monotonicity: Option<bool>,
    pub tolerances: Tolerances,
    pub seeds: BTreeMap<String, u64>,
    /// Wall-clock seconds per column; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v == Verdict::Pass)
    }

    /// 0 when every column passes and the columns are consistent, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() && self.agreement.consistent {
            0
        } else {
            1
        }
    }

    /// Pretty JSON with the timings emptied, for byte comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.timings.clear();
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

fn sup_cache() -> &'static Mutex<HashMap<String, TorusSup>> {
    static CACHE: OnceLock<Mutex<HashMap<String, TorusSup>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Torus sup with the per-dimension defaults, memoized per process.
pub fn cached_torus_sup(p: &LaurentPolynomial) -> Result<TorusSup> {
    let opts = TorusSupOptions::for_dimension(p.d());
    let key = format!("{}|{:?}", serde_json::to_string(p)?, opts);
    if let Some(s) = sup_cache().lock().expect("sup cache").get(&key) {
        return Ok(s.clone());
    }
    let s = torus_sup_with(p, opts)?;
    sup_cache().lock().expect("sup cache").insert(key, s.clone());
    Ok(s)
}

struct Columns {
    verdicts: BTreeMap<String, Verdict>,
    witnesses: BTreeMap<String, Witness>,
    details: ReportDetails,
    timings: BTreeMap<String, f64>,
}

fn run_columns(fam: &CommutingFamily, spec: &FamilySpec, with_transfer: bool) -> Result<Columns> {
    let sel = &spec.battery;
    let tol = spec.tolerances.psd;
    let d = fam.d();
    let mut c = Columns { verdicts: BTreeMap::new(), witnesses: BTreeMap::new(), details: ReportDetails::default(), timings: BTreeMap::new() };
    let grid = product_grid(&spec.grids.axis(), d, spec.grids.max_points)?;
    let clock = |c: &mut Columns, name: &str, start: Instant| {
        c.timings.insert(name.to_string(), start.elapsed().as_secs_f64());
    };

    if sel.complete_dissipativity {
        let start = Instant::now();
        let rep = complete_dissipativity_report(fam, tol)?;
        c.details.dissipation = rep
            .orders
            .iter()
            .map(|o| OrderRow { subset: o.subset, min_eigenvalue: o.verdict.min_eigenvalue, pass: o.verdict.is_psd })
            .collect();
        if let Some(w) = &rep.witness {
            c.witnesses.insert(
                COMPLETE_DISSIPATIVITY.into(),
                Witness::Dissipation { subset: w.subset, min_eigenvalue: w.verdict.min_eigenvalue },
            );
        }
        c.verdicts.insert(COMPLETE_DISSIPATIVITY.into(), Verdict::from_pass(rep.all_pass));
        clock(&mut c, COMPLETE_DISSIPATIVITY, start);
    }

    if sel.pk_scan {
        let start = Instant::now();
        let scan = pk_positivity_scan(fam, &grid, tol)?;
        c.details.pk_points = scan.points;
        c.details.pk_worst_min_eigenvalue = scan.cells.iter().map(|x| x.verdict.min_eigenvalue).reduce(f64::min);
        if let Some(w) = &scan.witness {
            c.witnesses.insert(
                PK_SCAN.into(),
                Witness::PkPoint { subset: w.subset, t: w.t.clone(), min_eigenvalue: w.verdict.min_eigenvalue },
            );
        }
        c.verdicts.insert(PK_SCAN.into(), Verdict::from_pass(scan.all_pass));
        clock(&mut c, PK_SCAN, start);
    }

    if sel.approximants {
        let start = Instant::now();
        let mut all = true;
        for make in [hille as fn(f64) -> ApproximantKind, yosida] {
            for &rate in &spec.grids.rates {
                let kind = make(rate);
                let afam = approximant_family(fam, &vec![kind; d])?;
                let rep = complete_dissipativity_report(&afam, tol)?;
                let worst = rep
                    .orders
                    .iter()
                    .min_by(|a, b| a.verdict.min_eigenvalue.total_cmp(&b.verdict.min_eigenvalue))
                    .expect("at least the empty subset");
                c.details.approximants.push(ApproximantRow {
                    approximant: kind.name().into(),
                    rate,
                    pass: rep.all_pass,
                    worst_subset: worst.subset,
                    worst_min_eigenvalue: worst.verdict.min_eigenvalue,
                });
                if let (Some(w), true) = (&rep.witness, all) {
                    c.witnesses.insert(
                        APPROXIMANTS.into(),
                        Witness::Approximant {
                            approximant: kind.name().into(),
                            rate,
                            subset: w.subset,
                            min_eigenvalue: w.verdict.min_eigenvalue,
                        },
                    );
                }
                all &= rep.all_pass;
            }
        }
        let axis = spec.grids.axis();
        let basis: Vec<Vec<crate::linalg::C64>> = (0..fam.dim())
            .map(|i| (0..fam.dim()).map(|j| crate::linalg::c(f64::from(u8::from(i == j)), 0.0)).collect())
            .collect();
        for (i, g) in fam.generators().iter().enumerate() {
            for make in [hille as fn(f64) -> ApproximantKind, yosida] {
                let p = convergence_profile(g, make(1.0), &spec.grids.rates, &axis, &basis)?;
                c.details.convergence.push((i, p));
            }
        }
        c.verdicts.insert(APPROXIMANTS.into(), Verdict::from_pass(all));
        clock(&mut c, APPROXIMANTS, start);
    }

    let corpus = polynomial_corpus(d, spec.grids.corpus_seed)?;
    if sel.polynomial_bounds {
        let start = Instant::now();
        let rows = bound_rows(fam, &corpus, &grid, spec.tolerances.bound)?;
        let worst_fail = rows
            .iter()
            .filter(|r| !r.pass)
            .max_by(|a, b| (a.max_norm - a.sup_upper).total_cmp(&(b.max_norm - b.sup_upper)));
        if let Some(w) = worst_fail {
            c.witnesses.insert(
                POLYNOMIAL_BOUNDS.into(),
                Witness::Bound { polynomial: w.polynomial.clone(), t: w.argmax_t.clone(), norm: w.max_norm, sup_upper: w.sup_upper },
            );
        }
        c.verdicts.insert(POLYNOMIAL_BOUNDS.into(), Verdict::from_pass(rows.iter().all(|r| r.pass)));
        c.details.bounds = rows;
        c.details.bound_points = grid.len();
        clock(&mut c, POLYNOMIAL_BOUNDS, start);
    }

    if sel.gram {
        let start = Instant::now();
        let rep = SemigroupRepresentation::new(fam.clone());
        let g = &spec.grids;
        let schedule = euclidean_gram_schedule(
            d,
            &g.gram_scales,
            g.gram_clouds,
            g.gram_cloud_size,
            g.gram_max_points,
            mix_seed(spec.monte_carlo.seed, 0x6772),
        );
        let scan = gram_scan(&rep, &schedule, tol)?;
        if let Some(w) = &scan.witness {
            let min = scan.entries.iter().find(|e| e.label == w.label).map_or(f64::NAN, |e| e.verdict.min_eigenvalue);
            c.witnesses.insert(
                GRAM.into(),
                Witness::Gram { label: w.label.clone(), points: w.points.iter().map(|p| p.coordinates()).collect(), min_eigenvalue: min },
            );
        }
        c.verdicts.insert(GRAM.into(), Verdict::from_pass(scan.all_pass));
        c.details.gram = scan.entries;
        clock(&mut c, GRAM, start);
    }

    if sel.transfer && with_transfer {
        let start = Instant::now();
        let tgrid = product_grid(&spec.grids.axis(), d, TRANSFER_POINTS)?;
        let mut all = true;
        for (pi, entry) in corpus.iter().enumerate().filter(|(_, e)| e.self_adjoint && e.poly.absolute_degree() <= 1) {
            for make in [hille as fn(f64) -> ApproximantKind, yosida] {
                for &rate in &spec.grids.rates {
                    let kind = make(rate);
                    let seed = mix_seed(spec.monte_carlo.seed, (pi as u64) << 8 | rate.to_bits() % 251);
                    let rep = transfer_check(
                        fam,
                        &vec![kind; d],
                        &entry.poly,
                        &tgrid,
                        spec.monte_carlo.n,
                        seed,
                        tol,
                        spec.tolerances.mc_sigmas,
                    )?;
                    let ok = rep.implication_holds && rep.mc_ok;
                    if !ok && all {
                        let bad = rep.points.iter().find(|p| !p.mc_within || (rep.base_psd_on_grid && !p.approx_psd));
                        let (t, detail) = match bad {
                            Some(p) if !p.mc_within => {
                                (p.t.clone(), format!("mc deviation {:e} vs std error {:e}", p.mc_deviation, p.mc_std_error))
                            }
                            Some(p) => (p.t.clone(), format!("approximant min eigenvalue {:e}", p.approx_min_eig)),
                            None => (Vec::new(), String::new()),
                        };
                        c.witnesses.insert(
                            TRANSFER.into(),
                            Witness::Transfer { polynomial: entry.name.clone(), approximant: kind.name().into(), rate, t, detail },
                        );
                    }
                    all &= ok;
                    c.details.transfer.push(TransferRow {
                        polynomial: entry.name.clone(),
                        approximant: kind.name().into(),
                        rate,
                        base_psd_on_grid: rep.base_psd_on_grid,
                        implication_holds: rep.implication_holds,
                        mc_ok: rep.mc_ok,
                    });
                }
            }
        }
        c.verdicts.insert(TRANSFER.into(), Verdict::from_pass(all));
        clock(&mut c, TRANSFER, start);
    }
    Ok(c)
}

fn hille(rate: f64) -> ApproximantKind {
    ApproximantKind::Hille { rate }
}

fn yosida(rate: f64) -> ApproximantKind {
    ApproximantKind::Yosida { rate }
}

/// max over the grid of ‖p(T(t))‖ against the certified torus bound, per polynomial.
pub fn bound_rows(fam: &CommutingFamily, corpus: &[CorpusEntry], grid: &[Vec<f64>], tol: f64) -> Result<Vec<BoundRow>> {
    let d = fam.d();
    let sups = corpus.iter().map(|e| cached_torus_sup(&e.poly)).collect::<Result<Vec<_>>>()?;
    let mut axis: Vec<Vec<(f64, ComplexMatrix)>> = vec![Vec::new(); d];
    for t in grid {
        for (i, &ti) in t.iter().enumerate() {
            if !axis[i].iter().any(|(s, _)| *s == ti) {
                axis[i].push((ti, evaluate(fam.generator(i), ti)?));
            }
        }
    }
    let norms = map_indexed(grid.len(), |pi| -> Result<Vec<f64>> {
        let ops: Vec<ComplexMatrix> =
            (0..d).map(|i| axis[i].iter().find(|(s, _)| *s == grid[pi][i]).expect("tabulated").1.clone()).collect();
        let mut ev = RegularEvaluator::new(&ops)?;
        corpus.iter().map(|e| Ok(operator_norm(&ev.eval(&e.poly)?))).collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(corpus
        .iter()
        .zip(&sups)
        .enumerate()
        .map(|(k, (e, sup))| {
            let (arg, max_norm) = norms
                .iter()
                .enumerate()
                .map(|(pi, row)| (pi, row[k]))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            BoundRow {
                polynomial: e.name.clone(),
                sup_estimate: sup.estimate,
                sup_upper: sup.upper_bound,
                max_norm,
                argmax_t: grid.get(arg).cloned().unwrap_or_default(),
                pass: max_norm <= sup.upper_bound + tol,
            }
        })
        .collect())
}

fn agreement(verdicts: &BTreeMap<String, Verdict>) -> Agreement {
    let mut defects = Vec::new();
    let mut notes = Vec::new();
    let comp: Vec<(&str, Verdict)> = COMPUTABLE_COLUMNS.iter().filter_map(|k| verdicts.get(*k).map(|v| (*k, *v))).collect();
    let agree = comp.windows(2).all(|w| w[0].1 == w[1].1);
    if !agree {
        let parts: Vec<String> = comp.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
        defects.push(format!("computable columns disagree: {}", parts.join(", ")));
    }
    if agree {
        if let Some(&(_, common)) = comp.first() {
            match common {
                Verdict::Pass => {
                    for col in [POLYNOMIAL_BOUNDS, GRAM, TRANSFER] {
                        if verdicts.get(col) == Some(&Verdict::Fail) {
                            defects.push(format!("{col} fails on a row the computable columns pass"));
                        }
                    }
                }
                Verdict::Fail => {
                    if verdicts.get(GRAM) == Some(&Verdict::Pass) {
                        defects.push("gram schedule found no witness on a failing row".into());
                    }
                    if verdicts.get(POLYNOMIAL_BOUNDS) == Some(&Verdict::Pass) {
                        notes.push("no certified polynomial-bound violation on the grid".into());
                    }
                }
            }
        }
    }
    Agreement { computable_columns_agree: agree, consistent: defects.is_empty(), defects, notes }
}

/// Runs every selected column on the family of `spec`.
pub fn run_equivalence_battery(spec: &FamilySpec) -> Result<AnalysisReport> {
    spec.validate()?;
    let build_start = Instant::now();
    let fam = spec.build_family()?;
    let build_time = build_start.elapsed().as_secs_f64();
    let mut cols = run_columns(&fam, spec, true)?;
    cols.timings.insert("build".into(), build_time);
    let agreement = agreement(&cols.verdicts);

    let mut subsets = Vec::new();
    let mut subset_monotonicity = None;
    if spec.battery.subsets && fam.d() > 1 {
        let start = Instant::now();
        for k in Subset::all(fam.d()).filter(|k| !k.is_empty() && *k != Subset::full(fam.d())) {
            let sub = fam.restrict(k)?;
            let sc = run_columns(&sub, spec, false)?;
            let all_pass = sc.verdicts.values().all(|v| *v == Verdict::Pass);
            subsets.push(SubsetRow { subset: k, verdicts: sc.verdicts, all_pass });
        }
        let full_fails = COMPUTABLE_COLUMNS.iter().filter_map(|k| cols.verdicts.get(*k)).all(|v| *v == Verdict::Fail);
        subset_monotonicity = Some(full_fails && subsets.iter().all(|r| r.all_pass));
        cols.timings.insert("subsets".into(), start.elapsed().as_secs_f64());
    }

    let mut seeds = BTreeMap::new();
    seeds.insert("monte_carlo".to_string(), spec.monte_carlo.seed);
    seeds.insert("corpus".to_string(), spec.grids.corpus_seed);
    match &spec.family {
        FamilySource::Tensor(r) => {
            seeds.insert("family".into(), r.seed);
        }
        FamilySource::Normal(r) => {
            seeds.insert("family".into(), r.seed);
        }
        FamilySource::Counterexample(p) => {
            seeds.insert("family".into(), p.seed);
        }
        _ => {}
    }
    Ok(AnalysisReport {
        spec_digest: spec.digest()?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        name: spec.name.clone(),
        family: FamilySummary { d: fam.d(), dim: fam.dim(), commutator_bound: fam.commutator_bound() },
        verdicts: cols.verdicts,
        witnesses: cols.witnesses,
        details: cols.details,
        agreement,
        subsets,
        subset_monotonicity,
        tolerances: spec.tolerances,
        seeds,
        timings: cols.timings,
    })
}
