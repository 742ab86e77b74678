//! Performance and calibration tables, plus small CSV helpers.

use cardio_core::metrics::EvalReport;

pub const PERFORMANCE_HEADER: [&str; 6] = ["Model", "Accuracy", "Precision", "Recall", "F1", "AUC"];
pub const CALIBRATION_HEADER: [&str; 3] = ["model", "ece", "brier"];

/// Table cell for an undefined ratio.
pub const UNDEFINED: &str = "NA";

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRow {
    pub model: String,
    pub accuracy: f64,
    /// `None` when no row was predicted positive.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
    pub auc: f64,
}

impl PerformanceRow {
    pub fn from_report(model: &str, r: &EvalReport) -> Self {
        let m = &r.metrics;
        PerformanceRow {
            model: model.to_string(),
            accuracy: m.accuracy,
            precision: (!m.precision_undefined).then_some(m.precision),
            recall: (!m.recall_undefined).then_some(m.recall),
            f1: m.f1,
            auc: r.auc,
        }
    }

    pub fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(pct).unwrap_or_else(|| UNDEFINED.to_string());
        vec![
            self.model.clone(),
            pct(self.accuracy),
            opt(self.precision),
            opt(self.recall),
            pct(self.f1),
            pct(self.auc),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub model: String,
    pub ece: f64,
    pub brier: f64,
}

impl CalibrationRow {
    pub fn from_report(model: &str, r: &EvalReport) -> Self {
        CalibrationRow {
            model: model.to_string(),
            ece: r.ece,
            brier: r.brier,
        }
    }

    pub fn cells(&self) -> Vec<String> {
        vec![self.model.clone(), score(self.ece), score(self.brier)]
    }
}

/// Fraction as a percentage with one decimal.
pub fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

pub fn score(v: f64) -> String {
    format!("{v:.4}")
}

pub fn csv_table<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header.iter().map(|h| h.as_ref()))
        .expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn markdown_table<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let line = |cells: Vec<&str>| format!("| {} |\n", cells.join(" | "));
    let mut out = line(header.iter().map(|h| h.as_ref()).collect());
    out.push_str(&line(header.iter().map(|_| "---").collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(|c| c.as_str()).collect()));
    }
    out
}

pub fn performance_rows(rows: &[PerformanceRow]) -> Vec<Vec<String>> {
    rows.iter().map(PerformanceRow::cells).collect()
}

pub fn calibration_rows(rows: &[CalibrationRow]) -> Vec<Vec<String>> {
    rows.iter().map(CalibrationRow::cells).collect()
}

/// Parses a CSV emitted by [`csv_table`] back into header and rows.
pub fn parse_csv_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Optional float cell; blank when absent.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}
