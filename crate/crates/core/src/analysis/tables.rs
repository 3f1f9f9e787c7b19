//! CSV tables: header row, fixed column order, LF line endings.

use crate::error::{Error, Result};

use super::battery::{AnalysisReport, Verdict, APPROXIMANTS, COMPLETE_DISSIPATIVITY, GRAM, PK_SCAN, POLYNOMIAL_BOUNDS, TRANSFER};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::ShapeMismatch(format!("row of {} cells for {} columns", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 cells"))
    }
}

/// Shortest round-trip decimal; Rust float formatting never uses a locale.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn verdict_cell(r: &AnalysisReport, col: &str) -> String {
    match r.verdicts.get(col) {
        Some(Verdict::Pass) => "PASS".into(),
        Some(Verdict::Fail) => "FAIL".into(),
        None => "-".into(),
    }
}

/// One row per report.
pub fn verdict_table(reports: &[AnalysisReport]) -> Result<Table> {
    let cols = [COMPLETE_DISSIPATIVITY, PK_SCAN, APPROXIMANTS, POLYNOMIAL_BOUNDS, GRAM, TRANSFER];
    let mut header = vec!["name", "d", "dim"];
    header.extend(cols);
    header.push("consistent");
    let mut t = Table::new(&header);
    for r in reports {
        let mut row = vec![r.name.clone(), r.family.d.to_string(), r.family.dim.to_string()];
        row.extend(cols.iter().map(|c| verdict_cell(r, c)));
        row.push(r.agreement.consistent.to_string());
        t.push(row)?;
    }
    Ok(t)
}

pub fn dissipation_table(r: &AnalysisReport) -> Result<Table> {
    let mut t = Table::new(&["subset", "min_eigenvalue", "pass"]);
    for o in &r.details.dissipation {
        t.push(vec![o.subset.to_string(), num(o.min_eigenvalue), o.pass.to_string()])?;
    }
    Ok(t)
}

pub fn convergence_table(r: &AnalysisReport) -> Result<Table> {
    let mut t = Table::new(&["generator", "approximant", "rate", "sup_error", "sup_norm"]);
    for (i, p) in &r.details.convergence {
        for row in &p.rows {
            t.push(vec![(i + 1).to_string(), p.kind.clone(), num(row.rate), num(row.sup_error), num(row.sup_norm)])?;
        }
    }
    Ok(t)
}

pub fn subset_table(r: &AnalysisReport) -> Result<Table> {
    let cols = [COMPLETE_DISSIPATIVITY, PK_SCAN, APPROXIMANTS, POLYNOMIAL_BOUNDS, GRAM];
    let mut header = vec!["subset"];
    header.extend(cols);
    let mut t = Table::new(&header);
    for s in &r.subsets {
        let mut row = vec![s.subset.to_string()];
        row.extend(cols.iter().map(|c| match s.verdicts.get(*c) {
            Some(Verdict::Pass) => "PASS".to_string(),
            Some(Verdict::Fail) => "FAIL".to_string(),
            None => "-".to_string(),
        }));
        t.push(row)?;
    }
    Ok(t)
}
