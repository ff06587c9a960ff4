//! CSV reports.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), so a value
//! read back is the same `f64`.

use std::io::Write;
use std::path::Path;

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed form or independent computation.
    Derived,
    /// Stated in the source text.
    Paper,
    /// Follows from the construction.
    Trivial,
    /// Recorded without a reference.
    Observation,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Derived => "DERIVED",
            Provenance::Paper => "PAPER",
            Provenance::Trivial => "TRIVIAL",
            Provenance::Observation => "OBSERVATION",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub provenance: Provenance,
    /// `None` for rows that record a value without checking it.
    pub pass: Option<bool>,
}

impl ReportRow {
    /// Unchecked value.
    pub fn info(case: &str, quantity: &str, value: f64) -> Self {
        Self {
            case: case.into(),
            quantity: quantity.into(),
            value,
            reference: None,
            provenance: Provenance::Observation,
            pass: None,
        }
    }

    /// `|value - reference| <= tol`.
    pub fn near(case: &str, quantity: &str, value: f64, reference: f64, tol: f64, provenance: Provenance) -> Self {
        Self {
            case: case.into(),
            quantity: quantity.into(),
            value,
            reference: Some(reference),
            provenance,
            pass: Some((value - reference).abs() <= tol),
        }
    }

    /// A value checked by a predicate other than closeness.
    pub fn check(case: &str, quantity: &str, value: f64, reference: Option<f64>, provenance: Provenance, pass: bool) -> Self {
        Self { case: case.into(), quantity: quantity.into(), value, reference, provenance, pass: Some(pass) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
    pub grid: String,
    pub seed: u64,
}

/// One term of an integral identity.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRow {
    pub case: String,
    pub side: &'static str,
    pub term: String,
    pub value: f64,
}

/// Everything one run produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<VerdictRow>,
    pub terms: Vec<TermRow>,
    pub notes: Vec<String>,
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false)) && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.verdicts.extend(other.verdicts);
        self.terms.extend(other.terms);
        self.notes.extend(other.notes);
    }

    pub fn rows_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case", "quantity", "value", "reference", "provenance", "pass"]).expect("in-memory write");
        for r in &self.rows {
            let reference = r.reference.map(num).unwrap_or_default();
            let pass = r.pass.map(flag).unwrap_or("");
            let prov = if r.reference.is_some() || r.provenance != Provenance::Observation { r.provenance.tag() } else { "" };
            w.write_record([r.case.as_str(), &r.quantity, &num(r.value), &reference, prov, pass]).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn verdicts_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case", "lhs", "rhs", "slack", "tol", "pass", "grid", "seed"]).expect("in-memory write");
        for v in &self.verdicts {
            w.write_record([
                v.case.as_str(),
                &num(v.lhs),
                &num(v.rhs),
                &num(v.slack),
                &num(v.tol),
                flag(v.pass),
                &v.grid,
                &v.seed.to_string(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn terms_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case", "side", "term", "value", "abs_value"]).expect("in-memory write");
        for t in &self.terms {
            w.write_record([t.case.as_str(), t.side, &t.term, &num(t.value), &num(t.value.abs())])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Writes `report.csv`, plus `verdicts.csv` and `terms.csv` when there is
    /// something to put in them. Returns the written paths.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![("report.csv", self.rows_csv())];
        if !self.verdicts.is_empty() {
            files.push(("verdicts.csv", self.verdicts_csv()));
        }
        if !self.terms.is_empty() {
            files.push(("terms.csv", self.terms_csv()));
        }
        let mut paths = Vec::new();
        for (name, bytes) in files {
            let p = dir.join(name);
            std::fs::File::create(&p)?.write_all(&bytes)?;
            paths.push(p);
        }
        Ok(paths)
    }
}
