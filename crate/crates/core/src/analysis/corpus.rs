//! Seeded family corpus for sweeping the battery.

use serde::{Deserialize, Serialize};

use super::battery::{run_equivalence_battery, AnalysisReport, Verdict, COMPUTABLE_COLUMNS};
use super::spec::{FamilySource, FamilySpec, NormalRecipe, TensorRecipe};
use crate::counterexample::CounterexampleParams;
use crate::error::Result;

/// Grid cap used for corpus rows; d = 3 families get a 12^3 lattice.
pub const CORPUS_MAX_POINTS: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    Pass,
    Fail,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub spec: FamilySpec,
    pub expected: Expected,
}

fn entry(name: String, family: FamilySource, expected: Expected) -> CorpusEntry {
    let mut spec = FamilySpec::new(name, family);
    spec.grids.max_points = CORPUS_MAX_POINTS;
    CorpusEntry { spec, expected }
}

fn tensor(dims: &[usize], seed: u64, scale: f64, margin: f64) -> CorpusEntry {
    let name = format!("tensor-{}-s{seed}-x{scale}-m{margin}", dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"));
    entry(name, FamilySource::Tensor(TensorRecipe { dims: dims.to_vec(), seed, scale, margin }), Expected::Pass)
}

fn normal(d: usize, dim: usize, seed: u64, scale: f64, margin: f64) -> CorpusEntry {
    let name = format!("normal-d{d}-n{dim}-s{seed}-x{scale}-m{margin}");
    entry(name, FamilySource::Normal(NormalRecipe { d, dim, seed, scale, margin }), Expected::Pass)
}

/// Doubly commuting dissipative families (dim ≤ 8, d ≤ 3); every column should pass.
pub fn pass_corpus() -> Vec<CorpusEntry> {
    let mut v = Vec::new();
    for n in 1..=8 {
        v.push(tensor(&[n], 100 + n as u64, 1.0, 0.0));
    }
    for (k, dims) in [[2, 2], [2, 3], [3, 2], [2, 4], [4, 2]].iter().enumerate() {
        for s in 0..2 {
            v.push(tensor(dims, 200 + 10 * k as u64 + s, 1.0, 0.0));
        }
    }
    for s in 0..6 {
        v.push(tensor(&[2, 2, 2], 300 + s, 1.0, 0.0));
    }
    for d in [2, 3] {
        for dim in 2..=8 {
            v.push(normal(d, dim, 400 + 10 * d as u64 + dim as u64, 1.0, 0.0));
        }
    }
    for dim in [3, 5, 8] {
        v.push(normal(1, dim, 500 + dim as u64, 1.0, 0.0));
    }
    for s in 0..3 {
        v.push(tensor(&[2, 3], 600 + s, 3.0, 0.0));
        v.push(tensor(&[2, 2], 610 + s, 1.0, 0.5));
        v.push(normal(2, 6, 620 + s, 3.0, 0.0));
        v.push(normal(3, 4, 630 + s, 0.5, 0.25));
    }
    v
}

fn counterexample(d: usize, dim1: usize, dim2: usize, alpha: f64, seed: u64) -> CorpusEntry {
    let name = format!("counterexample-d{d}-{dim1}x{dim2}-a{alpha}-s{seed}");
    let p = CounterexampleParams { d, dim1, dim2, alpha, seed };
    entry(name, FamilySource::Counterexample(p), Expected::Fail)
}

/// Block counterexamples for d ∈ {2, 3}: every column should fail.
pub fn fail_corpus() -> Vec<CorpusEntry> {
    vec![
        counterexample(2, 4, 2, 0.8, 3),
        counterexample(2, 3, 1, 0.75, 5),
        counterexample(2, 5, 3, 0.9, 7),
        counterexample(3, 4, 2, 0.65, 3),
        counterexample(3, 5, 3, 0.6, 9),
    ]
}

pub fn default_corpus() -> Vec<CorpusEntry> {
    let mut v = pass_corpus();
    v.extend(fail_corpus());
    v
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusRow {
    pub name: String,
    pub expected: Expected,
    pub computable: Vec<Verdict>,
    /// Computable columns agree with each other and with `expected`.
    pub matches_expected: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusRun {
    pub rows: Vec<CorpusRow>,
    pub all_consistent: bool,
    pub all_match: bool,
    #[serde(skip)]
    pub reports: Vec<AnalysisReport>,
}

pub fn run_corpus(entries: &[CorpusEntry]) -> Result<CorpusRun> {
    let mut rows = Vec::with_capacity(entries.len());
    let mut reports = Vec::with_capacity(entries.len());
    for e in entries {
        let r = run_equivalence_battery(&e.spec)?;
        let computable: Vec<Verdict> = COMPUTABLE_COLUMNS.iter().filter_map(|c| r.verdicts.get(*c).copied()).collect();
        let want = match e.expected {
            Expected::Pass => Verdict::Pass,
            Expected::Fail => Verdict::Fail,
        };
        rows.push(CorpusRow {
            name: r.name.clone(),
            expected: e.expected,
            matches_expected: computable.iter().all(|v| *v == want),
            consistent: r.agreement.consistent,
            computable,
        });
        reports.push(r);
    }
    let all_consistent = rows.iter().all(|r| r.consistent);
    let all_match = rows.iter().all(|r| r.matches_expected);
    Ok(CorpusRun { rows, all_consistent, all_match, reports })
}
