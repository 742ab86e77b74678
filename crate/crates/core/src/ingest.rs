//! Parsing and schema validation of the cardio checkup CSV.
//!
//! Rows that cannot be coerced into a [`RawRecord`] are quarantined in
//! [`RawDataset::rejected`] with their line number; they never abort the
//! parse. Empty cells are read as missing values and left for imputation.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names in the order they are written back out.
pub const COLUMNS: [&str; 13] = [
    "id",
    "age",
    "gender",
    "height",
    "weight",
    "ap_hi",
    "ap_lo",
    "cholesterol",
    "gluc",
    "smoke",
    "alco",
    "active",
    "cardio",
];

/// One row of the source file. Feature fields are `None` when the cell was empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: i64,
    pub age_days: Option<i64>,
    /// 1 female, 2 male.
    pub gender: Option<i64>,
    pub height_cm: Option<f64>,
    pub weight_kg: Option<f64>,
    pub ap_hi: Option<f64>,
    pub ap_lo: Option<f64>,
    /// 1 normal, 2 above normal, 3 well above normal.
    pub cholesterol: Option<i64>,
    pub gluc: Option<i64>,
    pub smoke: Option<i64>,
    pub alco: Option<i64>,
    pub active: Option<i64>,
    pub cardio: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawDataset {
    pub records: Vec<RawRecord>,
    pub source_path: String,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    /// 1-based line in the source file, or the record position + 2 when the
    /// dataset was built in memory.
    pub line: u64,
    pub column: String,
    pub reason: String,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Picks `;` when the header contains one, otherwise `,`.
pub fn detect_delimiter(header: &str) -> u8 {
    if header.contains(';') {
        b';'
    } else {
        b','
    }
}

pub fn read_csv_file(path: impl AsRef<Path>, delimiter: Option<u8>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut ds = parse_csv(std::io::BufReader::new(file), delimiter)?;
    ds.source_path = path.display().to_string();
    Ok(ds)
}

struct ColumnIndex {
    id: Option<usize>,
    fields: [usize; 12],
}

fn index_header(header: &csv::ByteRecord) -> Result<ColumnIndex> {
    let names: Vec<String> = header
        .iter()
        .map(|f| String::from_utf8_lossy(f).trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    let find = |name: &str| names.iter().position(|n| n == name);
    let mut missing = Vec::new();
    let mut fields = [0usize; 12];
    for (slot, name) in COLUMNS[1..].iter().enumerate() {
        match find(name) {
            Some(i) => fields[slot] = i,
            None => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    Ok(ColumnIndex {
        id: find("id"),
        fields,
    })
}

fn cell<'a>(rec: &'a csv::ByteRecord, idx: usize, name: &str) -> std::result::Result<&'a str, String> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| format!("{name}: field missing (row has {} fields)", rec.len()))?;
    std::str::from_utf8(raw)
        .map(str::trim)
        .map_err(|_| format!("{name}: invalid UTF-8"))
}

fn parse_int(s: &str, name: &str) -> std::result::Result<Option<i64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    if let Ok(v) = s.parse::<i64>() {
        return Ok(Some(v));
    }
    // Integral floats such as "2.0" are accepted for integer columns.
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(Some(v as i64)),
        _ => Err(format!("{name}: cannot parse {s:?} as integer")),
    }
}

fn parse_num(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("{name}: cannot parse {s:?} as number")),
    }
}

fn parse_row(rec: &csv::ByteRecord, cols: &ColumnIndex, ordinal: u64) -> std::result::Result<RawRecord, String> {
    let f = |slot: usize| cell(rec, cols.fields[slot], COLUMNS[slot + 1]);
    let int = |slot: usize| f(slot).and_then(|s| parse_int(s, COLUMNS[slot + 1]));
    let num = |slot: usize| f(slot).and_then(|s| parse_num(s, COLUMNS[slot + 1]));

    let id = match cols.id {
        Some(i) => parse_int(cell(rec, i, "id")?, "id")?.ok_or("id: empty")?,
        None => ordinal as i64,
    };
    let cardio = int(11)?.ok_or("cardio: target is empty")?;
    Ok(RawRecord {
        id,
        age_days: int(0)?,
        gender: int(1)?,
        height_cm: num(2)?,
        weight_kg: num(3)?,
        ap_hi: num(4)?,
        ap_lo: num(5)?,
        cholesterol: int(6)?,
        gluc: int(7)?,
        smoke: int(8)?,
        alco: int(9)?,
        active: int(10)?,
        cardio,
    })
}

/// Parses a header + data CSV. The delimiter is sniffed from the header
/// when not given. Blank lines are not data lines and are skipped.
pub fn parse_csv<R: Read>(mut source: R, delimiter: Option<u8>) -> Result<RawDataset> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let first_line_end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let header_text = String::from_utf8_lossy(&bytes[..first_line_end]);
    let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(&header_text));

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());

    let mut records_iter = reader.byte_records();
    let header = match records_iter.next() {
        Some(h) => h?,
        None => return Err(Error::MissingColumns(COLUMNS[1..].iter().map(|s| s.to_string()).collect())),
    };
    let cols = index_header(&header)?;

    let mut ds = RawDataset::default();
    let mut ordinal = 0u64;
    for rec in records_iter {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                ds.rejected.push(Rejection {
                    line,
                    reason: format!("malformed row: {e}"),
                });
                ordinal += 1;
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(ordinal + 2);
        match parse_row(&rec, &cols, ordinal) {
            Ok(r) => ds.records.push(r),
            Err(reason) => ds.rejected.push(Rejection { line, reason }),
        }
        ordinal += 1;
    }
    Ok(ds)
}

fn check_code(v: Option<i64>, allowed: &[i64], column: &str, line: u64, out: &mut Vec<SchemaViolation>) {
    if let Some(v) = v {
        if !allowed.contains(&v) {
            out.push(SchemaViolation {
                line,
                column: column.to_string(),
                reason: format!("code {v} not in {allowed:?}"),
            });
        }
    }
}

fn check_positive(v: Option<f64>, column: &str, line: u64, out: &mut Vec<SchemaViolation>) {
    if let Some(v) = v {
        if v <= 0.0 {
            out.push(SchemaViolation {
                line,
                column: column.to_string(),
                reason: format!("non-positive measurement {v}"),
            });
        }
    }
}

/// Violations of a single record; `line` is echoed into each entry.
pub fn record_violations(r: &RawRecord, line: u64) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    check_positive(r.age_days.map(|v| v as f64), "age", line, &mut out);
    check_code(r.gender, &[1, 2], "gender", line, &mut out);
    check_positive(r.height_cm, "height", line, &mut out);
    check_positive(r.weight_kg, "weight", line, &mut out);
    check_positive(r.ap_hi, "ap_hi", line, &mut out);
    check_positive(r.ap_lo, "ap_lo", line, &mut out);
    check_code(r.cholesterol, &[1, 2, 3], "cholesterol", line, &mut out);
    check_code(r.gluc, &[1, 2, 3], "gluc", line, &mut out);
    check_code(r.smoke, &[0, 1], "smoke", line, &mut out);
    check_code(r.alco, &[0, 1], "alco", line, &mut out);
    check_code(r.active, &[0, 1], "active", line, &mut out);
    check_code(Some(r.cardio), &[0, 1], "cardio", line, &mut out);
    out
}

/// One violation per out-of-domain code or non-positive measurement.
/// Line numbers are record positions offset past the header, which
/// equals the file line when nothing was rejected.
pub fn validate_schema(dataset: &RawDataset) -> Vec<SchemaViolation> {
    dataset
        .records
        .iter()
        .enumerate()
        .flat_map(|(i, r)| record_violations(r, i as u64 + 2))
        .collect()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes accepted records back out with the given delimiter.
pub fn write_csv<W: Write>(records: &[RawRecord], delimiter: u8, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.id.to_string(),
            fmt_opt(r.age_days),
            fmt_opt(r.gender),
            fmt_opt(r.height_cm),
            fmt_opt(r.weight_kg),
            fmt_opt(r.ap_hi),
            fmt_opt(r.ap_lo),
            fmt_opt(r.cholesterol),
            fmt_opt(r.gluc),
            fmt_opt(r.smoke),
            fmt_opt(r.alco),
            fmt_opt(r.active),
            r.cardio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejected<W: Write>(rejected: &[Rejection], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line", "reason"])?;
    for r in rejected {
        w.write_record([r.line.to_string(), r.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}
