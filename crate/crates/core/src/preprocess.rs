//! Cleaning, feature derivation, imputation, encoding and splitting.
//!
//! The pipeline order is fixed: [`apply_cleaning`] is the only step that
//! drops rows. Everything after it keeps row count and order, and every
//! fitted statistic (imputation fills, scaler moments) comes from the
//! training indices alone.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FeatureFrame, Matrix, OneHotGroup, Scaler};
use crate::ingest::{record_violations, RawDataset, RawRecord};

pub const DAYS_PER_YEAR: f64 = 365.25;

pub fn age_days_to_years(days: i64) -> Result<f64> {
    if days < 0 {
        return Err(Error::domain(format!("negative age {days} days")));
    }
    Ok(days as f64 / DAYS_PER_YEAR)
}

/// Body-mass index in kg/m².
pub fn compute_bmi(weight_kg: f64, height_cm: f64) -> Result<f64> {
    if !(weight_kg > 0.0) || !(height_cm > 0.0) {
        return Err(Error::domain(format!(
            "BMI needs positive weight and height, got {weight_kg} kg / {height_cm} cm"
        )));
    }
    let m = height_cm / 100.0;
    Ok(weight_kg / (m * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningRules {
    pub ap_hi_range: (f64, f64),
    pub ap_lo_range: (f64, f64),
    pub height_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub require_ap_hi_gt_ap_lo: bool,
}

impl Default for CleaningRules {
    fn default() -> Self {
        CleaningRules {
            ap_hi_range: (40.0, 250.0),
            ap_lo_range: (30.0, 200.0),
            height_range: (100.0, 220.0),
            weight_range: (30.0, 250.0),
            require_ap_hi_gt_ap_lo: true,
        }
    }
}

impl CleaningRules {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("ap_hi_range", self.ap_hi_range),
            ("ap_lo_range", self.ap_lo_range),
            ("height_range", self.height_range),
            ("weight_range", self.weight_range),
        ] {
            if !(lo < hi) {
                return Err(Error::config(format!("{name}: min {lo} must be below max {hi}")));
            }
        }
        Ok(())
    }
}

/// Rule names in the order they are checked. A dropped row is charged to
/// the first rule it fails, so the counts partition the dropped rows.
pub const CLEANING_RULES: [&str; 6] = [
    "schema",
    "ap_hi_range",
    "ap_lo_range",
    "height_range",
    "weight_range",
    "ap_hi_gt_ap_lo",
];

#[derive(Debug, Clone)]
pub struct CleaningOutcome {
    pub retained: RawDataset,
    /// Drop count per entry of [`CLEANING_RULES`].
    pub dropped: BTreeMap<String, usize>,
}

impl CleaningOutcome {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

fn outside(v: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    v.is_some_and(|v| v < lo || v > hi)
}

fn failing_rule(r: &RawRecord, rules: &CleaningRules) -> Option<&'static str> {
    if !record_violations(r, 0).is_empty() {
        return Some("schema");
    }
    if outside(r.ap_hi, rules.ap_hi_range) {
        return Some("ap_hi_range");
    }
    if outside(r.ap_lo, rules.ap_lo_range) {
        return Some("ap_lo_range");
    }
    if outside(r.height_cm, rules.height_range) {
        return Some("height_range");
    }
    if outside(r.weight_kg, rules.weight_range) {
        return Some("weight_range");
    }
    if rules.require_ap_hi_gt_ap_lo {
        if let (Some(hi), Some(lo)) = (r.ap_hi, r.ap_lo) {
            if hi <= lo {
                return Some("ap_hi_gt_ap_lo");
            }
        }
    }
    None
}

/// Drops rows with schema violations or implausible measurements.
/// Range bounds are inclusive; missing values pass every rule.
pub fn apply_cleaning(dataset: &RawDataset, rules: &CleaningRules) -> CleaningOutcome {
    let mut dropped: BTreeMap<String, usize> =
        CLEANING_RULES.iter().map(|r| (r.to_string(), 0)).collect();
    let mut retained = Vec::with_capacity(dataset.records.len());
    for r in &dataset.records {
        match failing_rule(r, rules) {
            Some(rule) => *dropped.get_mut(rule).unwrap() += 1,
            None => retained.push(r.clone()),
        }
    }
    CleaningOutcome {
        retained: RawDataset {
            records: retained,
            source_path: dataset.source_path.clone(),
            rejected: dataset.rejected.clone(),
        },
        dropped,
    }
}

/// Quantile of sorted data, linear interpolation between order statistics
/// at position `q·(n−1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Tukey fences: indices of values outside `[Q1 − 1.5·IQR, Q3 + 1.5·IQR]`.
pub fn census_outliers_iqr(values: &[f64]) -> Result<Vec<usize>> {
    if values.len() < 4 {
        return Err(Error::domain(format!(
            "IQR census needs at least 4 values, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < lo || v > hi)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierCensus {
    /// `(column, flagged row indices)`; the count is the list length.
    pub columns: Vec<(String, Vec<usize>)>,
}

impl OutlierCensus {
    pub fn count(&self, column: &str) -> Option<usize> {
        self.columns.iter().find(|(c, _)| c == column).map(|(_, v)| v.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Binary,
    /// Categorical with codes 1..=levels.
    Categorical { levels: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<Option<f64>>,
}

/// Cleaned records as typed columns, before encoding. Derived columns
/// (`age_years`, `bmi`) are already present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseTable {
    pub ids: Vec<i64>,
    pub columns: Vec<BaseColumn>,
    pub target: Vec<u8>,
}

/// Numeric columns of the base table, in order.
pub const NUMERIC_COLUMNS: [&str; 6] = ["age_years", "height", "weight", "ap_hi", "ap_lo", "bmi"];

impl BaseTable {
    /// Column order: age_years, height, weight, ap_hi, ap_lo, [bmi], gender,
    /// smoke, alco, active, cholesterol, gluc. `gender` becomes a 0/1 male flag.
    pub fn from_records(records: &[RawRecord], include_bmi: bool) -> Result<Self> {
        let mut columns = Vec::new();
        let numeric = |name: &str, f: &dyn Fn(&RawRecord) -> Option<f64>| BaseColumn {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            values: records.iter().map(f).collect(),
        };
        let mut ages = Vec::with_capacity(records.len());
        for r in records {
            ages.push(match r.age_days {
                Some(d) => Some(age_days_to_years(d)?),
                None => None,
            });
        }
        columns.push(BaseColumn {
            name: "age_years".into(),
            kind: ColumnKind::Numeric,
            values: ages,
        });
        columns.push(numeric("height", &|r| r.height_cm));
        columns.push(numeric("weight", &|r| r.weight_kg));
        columns.push(numeric("ap_hi", &|r| r.ap_hi));
        columns.push(numeric("ap_lo", &|r| r.ap_lo));
        if include_bmi {
            let mut bmi = Vec::with_capacity(records.len());
            for r in records {
                bmi.push(match (r.weight_kg, r.height_cm) {
                    (Some(w), Some(h)) => Some(compute_bmi(w, h)?),
                    _ => None,
                });
            }
            columns.push(BaseColumn {
                name: "bmi".into(),
                kind: ColumnKind::Numeric,
                values: bmi,
            });
        }
        let binary = |name: &str, f: &dyn Fn(&RawRecord) -> Option<i64>| BaseColumn {
            name: name.to_string(),
            kind: ColumnKind::Binary,
            values: records.iter().map(|r| f(r).map(|v| v as f64)).collect(),
        };
        columns.push(binary("gender", &|r| r.gender.map(|g| g - 1)));
        columns.push(binary("smoke", &|r| r.smoke));
        columns.push(binary("alco", &|r| r.alco));
        columns.push(binary("active", &|r| r.active));
        let categorical = |name: &str, f: &dyn Fn(&RawRecord) -> Option<i64>| BaseColumn {
            name: name.to_string(),
            kind: ColumnKind::Categorical { levels: 3 },
            values: records.iter().map(|r| f(r).map(|v| v as f64)).collect(),
        };
        columns.push(categorical("cholesterol", &|r| r.cholesterol));
        columns.push(categorical("gluc", &|r| r.gluc));

        let mut target = Vec::with_capacity(records.len());
        for r in records {
            match r.cardio {
                0 | 1 => target.push(r.cardio as u8),
                c => return Err(Error::domain(format!("record {}: cardio {c} is not binary", r.id))),
            }
        }
        Ok(BaseTable {
            ids: records.iter().map(|r| r.id).collect(),
            columns,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn column(&self, name: &str) -> Option<&BaseColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Present values of a column (missing cells skipped).
    pub fn present(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name).map(|c| c.values.iter().flatten().copied().collect())
    }

    /// IQR census over the numeric columns. Missing cells are skipped and
    /// flagged indices refer to table rows.
    pub fn outlier_census(&self) -> Result<OutlierCensus> {
        let mut columns = Vec::new();
        for c in self.columns.iter().filter(|c| c.kind == ColumnKind::Numeric) {
            let (rows, vals): (Vec<usize>, Vec<f64>) = c
                .values
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i, v)))
                .unzip();
            let flagged = census_outliers_iqr(&vals)?;
            columns.push((c.name.clone(), flagged.into_iter().map(|k| rows[k]).collect()));
        }
        Ok(OutlierCensus { columns })
    }
}

/// Per-column fill values fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    /// `(column name, fill)`; median for numeric, mode for binary/categorical.
    pub fills: Vec<(String, f64)>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Most frequent value; ties go to the smallest value.
fn mode(v: &[f64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &x in v {
        *counts.entry(x as i64).or_default() += 1;
    }
    let mut best = (0i64, 0usize);
    for (&k, &c) in &counts {
        if c > best.1 {
            best = (k, c);
        }
    }
    best.0 as f64
}

impl Imputer {
    pub fn fit(table: &BaseTable, train: &[usize]) -> Result<Self> {
        let mut fills = Vec::with_capacity(table.columns.len());
        for c in &table.columns {
            let vals: Vec<f64> = train.iter().filter_map(|&i| c.values[i]).collect();
            if vals.is_empty() {
                return Err(Error::domain(format!(
                    "column {} is entirely missing on training rows",
                    c.name
                )));
            }
            let fill = match c.kind {
                ColumnKind::Numeric => median(vals),
                ColumnKind::Binary | ColumnKind::Categorical { .. } => mode(&vals),
            };
            fills.push((c.name.clone(), fill));
        }
        Ok(Imputer { fills })
    }

    pub fn apply(&self, table: &BaseTable) -> Result<BaseTable> {
        let mut out = table.clone();
        for c in &mut out.columns {
            let fill = self
                .fills
                .iter()
                .find(|(n, _)| *n == c.name)
                .map(|(_, f)| *f)
                .ok_or_else(|| Error::ColumnMismatch(format!("imputer has no fill for {}", c.name)))?;
            for v in &mut c.values {
                if v.is_none() {
                    *v = Some(fill);
                }
            }
        }
        Ok(out)
    }
}

/// Fills holes with training-row medians (numeric) or modes (categorical).
pub fn impute(table: &BaseTable, train: &[usize]) -> Result<(BaseTable, Imputer)> {
    let imputer = Imputer::fit(table, train)?;
    let filled = imputer.apply(table)?;
    Ok((filled, imputer))
}

/// Encodes a complete base table: numeric and binary columns pass through,
/// categorical columns become one indicator per level. Nothing is scaled.
pub fn encode(table: &BaseTable) -> Result<FeatureFrame> {
    let n = table.n_rows();
    let mut names = Vec::new();
    let mut groups = Vec::new();
    for c in &table.columns {
        match c.kind {
            ColumnKind::Numeric | ColumnKind::Binary => names.push(c.name.clone()),
            ColumnKind::Categorical { levels } => {
                groups.push(OneHotGroup {
                    name: c.name.clone(),
                    levels: (1..=levels as i64).collect(),
                    first_column: names.len(),
                });
                for l in 1..=levels {
                    names.push(format!("{}_{l}", c.name));
                }
            }
        }
    }
    let d = names.len();
    let mut matrix = Matrix::zeros(n, d);
    let mut j = 0;
    for c in &table.columns {
        match c.kind {
            ColumnKind::Numeric | ColumnKind::Binary => {
                for (i, v) in c.values.iter().enumerate() {
                    let v = v.ok_or_else(|| {
                        Error::domain(format!("column {} row {i} is missing; impute first", c.name))
                    })?;
                    matrix.set(i, j, v);
                }
                j += 1;
            }
            ColumnKind::Categorical { levels } => {
                for (i, v) in c.values.iter().enumerate() {
                    let v = v.ok_or_else(|| {
                        Error::domain(format!("column {} row {i} is missing; impute first", c.name))
                    })?;
                    let code = v as i64;
                    if code < 1 || code > levels as i64 {
                        return Err(Error::domain(format!("column {} row {i}: code {code}", c.name)));
                    }
                    matrix.set(i, j + (code - 1) as usize, 1.0);
                }
                j += levels as usize;
            }
        }
    }
    let mut frame = FeatureFrame::new(matrix, names, table.target.clone())?;
    frame.categorical_map = groups;
    Ok(frame)
}

/// One-hot encodes cholesterol/gluc and z-scores the numeric columns with
/// moments fitted on `train`. Binary flags are left as 0/1.
pub fn encode_and_standardize(table: &BaseTable, train: &[usize]) -> Result<FeatureFrame> {
    let mut frame = encode(table)?;
    let numeric: Vec<usize> = table
        .columns
        .iter()
        .filter(|c| c.kind == ColumnKind::Numeric)
        .map(|c| frame.column_index(&c.name).expect("numeric column encoded"))
        .collect();
    let scaler = Scaler::fit(&frame.matrix, &frame.column_names, &numeric, train)?;
    frame.standardize_with(&scaler)?;
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Per-class seeded shuffle; each class contributes `round(ratio·n_c)`
/// rows to train (at least one row to each side). Indices come back sorted.
pub fn stratified_split(target: &[u8], ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..target.len()).filter(|&i| target[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::domain(format!(
                "class {class} has {} members; stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let k = ((ratio * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_csv;

    fn rec(id: i64, ap_hi: f64, ap_lo: f64) -> RawRecord {
        RawRecord {
            id,
            age_days: Some(18000 + id * 37),
            gender: Some(1 + id % 2),
            height_cm: Some(160.0 + (id % 7) as f64),
            weight_kg: Some(60.0 + (id % 11) as f64),
            ap_hi: Some(ap_hi),
            ap_lo: Some(ap_lo),
            cholesterol: Some(1 + id % 3),
            gluc: Some(1 + (id / 3) % 3),
            smoke: Some(id % 2),
            alco: Some((id / 2) % 2),
            active: Some((id / 4) % 2),
            cardio: id % 2,
        }
    }

    #[test]
    fn age_conversion() {
        assert_eq!(age_days_to_years(0).unwrap(), 0.0);
        assert!((age_days_to_years(365).unwrap() - 0.999_315_537_303_217).abs() < 1e-12);
        assert!(age_days_to_years(-1).is_err());
    }

    #[test]
    fn bmi() {
        assert!((compute_bmi(74.0, 164.0).unwrap() - 27.513_384_889_946_46).abs() < 1e-9);
        assert_eq!(compute_bmi(63.5, 100.0).unwrap(), 63.5);
        assert!(compute_bmi(0.0, 170.0).is_err());
        assert!(compute_bmi(70.0, -1.0).is_err());
    }

    #[test]
    fn cleaning_rules() {
        let ds = RawDataset {
            records: vec![rec(0, 120.0, 80.0), rec(1, 80.0, 120.0), rec(2, 300.0, 80.0)],
            ..Default::default()
        };
        let out = apply_cleaning(&ds, &CleaningRules::default());
        assert_eq!(out.retained.records.len(), 1);
        assert_eq!(out.retained.records[0].id, 0);
        assert_eq!(out.dropped["ap_hi_gt_ap_lo"], 1);
        assert_eq!(out.dropped["ap_hi_range"], 1);
        assert_eq!(out.total_dropped(), 2);

        let lax = CleaningRules {
            require_ap_hi_gt_ap_lo: false,
            ..Default::default()
        };
        assert_eq!(apply_cleaning(&ds, &lax).retained.records.len(), 2);
    }

    #[test]
    fn schema_rows_are_dropped() {
        let mut bad = rec(3, 120.0, 80.0);
        bad.gender = Some(3);
        let ds = RawDataset {
            records: vec![bad, rec(4, 120.0, 80.0)],
            ..Default::default()
        };
        let out = apply_cleaning(&ds, &CleaningRules::default());
        assert_eq!(out.dropped["schema"], 1);
        assert_eq!(out.retained.records.len(), 1);
    }

    #[test]
    fn rules_validate_bounds() {
        let bad = CleaningRules {
            height_range: (220.0, 100.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(CleaningRules::default().validate().is_ok());
    }

    #[test]
    fn iqr_census() {
        assert!(census_outliers_iqr(&[5.0; 10]).unwrap().is_empty());
        // Q1 = 2, Q3 = 4, IQR = 2, fences [-1, 7].
        assert_eq!(census_outliers_iqr(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), vec![4]);
        assert!(census_outliers_iqr(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn linear_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.75), 3.25);
    }

    fn table_with(values: Vec<Option<f64>>, kind: ColumnKind) -> BaseTable {
        let n = values.len();
        BaseTable {
            ids: (0..n as i64).collect(),
            columns: vec![BaseColumn {
                name: "c".into(),
                kind,
                values,
            }],
            target: (0..n).map(|i| (i % 2) as u8).collect(),
        }
    }

    #[test]
    fn imputation() {
        let t = table_with(vec![Some(1.0), Some(2.0), Some(3.0), None], ColumnKind::Numeric);
        let (filled, imp) = impute(&t, &[0, 1, 2]).unwrap();
        assert_eq!(filled.columns[0].values[3], Some(2.0));
        assert_eq!(imp.fills[0].1, 2.0);

        let t = table_with(
            vec![Some(1.0), Some(1.0), Some(2.0), None],
            ColumnKind::Categorical { levels: 3 },
        );
        let (filled, _) = impute(&t, &[0, 1, 2]).unwrap();
        assert_eq!(filled.columns[0].values[3], Some(1.0));

        let complete = table_with(vec![Some(4.0), Some(5.0)], ColumnKind::Numeric);
        assert_eq!(impute(&complete, &[0, 1]).unwrap().0, complete);

        let t = table_with(vec![None, None, Some(3.0)], ColumnKind::Numeric);
        assert!(impute(&t, &[0, 1]).is_err());
    }

    #[test]
    fn zscore_and_onehot() {
        let records: Vec<RawRecord> = (0..40).map(|i| rec(i, 120.0 + i as f64, 70.0 + (i % 7) as f64)).collect();
        let table = BaseTable::from_records(&records, true).unwrap();
        let train: Vec<usize> = (0..30).collect();
        let frame = encode_and_standardize(&table, &train).unwrap();
        assert_eq!(frame.n_cols(), 16);
        assert_eq!(frame.column_names[10], "cholesterol_1");
        // record 1 has cholesterol 2
        let chol = frame.categorical_map.iter().find(|g| g.name == "cholesterol").unwrap();
        let row: Vec<f64> = chol.columns().map(|j| frame.matrix.get(1, j)).collect();
        assert_eq!(row, vec![0.0, 1.0, 0.0]);
        for g in &frame.categorical_map {
            for i in 0..frame.n_rows() {
                let s: f64 = g.columns().map(|j| frame.matrix.get(i, j)).sum();
                assert_eq!(s, 1.0);
            }
        }
        for &(j, _, _) in &frame.scaler.columns {
            let vals: Vec<f64> = train.iter().map(|&i| frame.matrix.get(i, j)).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
            assert!(m.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        let mut again = frame.clone();
        assert!(again.standardize_with(&frame.scaler).is_err());
    }

    #[test]
    fn zscore_definition() {
        let mut m = Matrix::from_rows(&[vec![12.0]]).unwrap();
        Scaler {
            columns: vec![(0, 10.0, 2.0)],
        }
        .apply(&mut m);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn zero_sd_is_fatal_and_named() {
        let records: Vec<RawRecord> = (0..10)
            .map(|i| {
                let mut r = rec(i, 120.0, 80.0);
                r.height_cm = Some(170.0);
                r
            })
            .collect();
        let table = BaseTable::from_records(&records, false).unwrap();
        let err = encode_and_standardize(&table, &[0, 1, 2, 3, 4]).unwrap_err();
        assert!(err.to_string().contains("height"));
    }

    #[test]
    fn split_exact_stratification() {
        let target = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let s = stratified_split(&target, 0.8, 7).unwrap();
        let pos = s.train_indices.iter().filter(|&&i| target[i] == 1).count();
        assert_eq!(pos, 4);
        assert_eq!(s.train_indices.len(), 8);
        assert_eq!(s, stratified_split(&target, 0.8, 7).unwrap());
        assert!(stratified_split(&[1, 0, 0, 0], 0.8, 1).is_err());
    }

    #[test]
    fn parsed_fixture_builds_table() {
        let text = "id;age;gender;height;weight;ap_hi;ap_lo;cholesterol;gluc;smoke;alco;active;cardio\n\
                    0;18393;2;168;62.0;110;80;1;1;0;0;1;0\n1;20228;1;156;85.0;140;90;3;1;0;0;1;1\n";
        let ds = parse_csv(text.as_bytes(), None).unwrap();
        let t = BaseTable::from_records(&ds.records, true).unwrap();
        assert_eq!(t.column("gender").unwrap().values, vec![Some(1.0), Some(0.0)]);
        assert_eq!(t.target, vec![0, 1]);
    }
}
