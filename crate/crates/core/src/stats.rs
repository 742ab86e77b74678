//! Hypothesis tests, correlation and logistic odds ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Matrix;
use crate::learners::logistic::{fit_gradient_descent, GdSettings};
use crate::special::{chi_square_sf, f_sf, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Df {
    Single(f64),
    Pair(f64, f64),
}

impl std::fmt::Display for Df {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Df::Single(d) => write!(f, "{d}"),
            Df::Pair(a, b) => write!(f, "{a},{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Df,
    pub p_value: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Unequal-variance two-sample t test with Welch–Satterthwaite df.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::domain("welch t test needs at least 2 values per group"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if !(va > 0.0) || !(vb > 0.0) {
        return Err(Error::domain("welch t test needs positive variance in both groups"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        statistic: t,
        df: Df::Single(df),
        p_value: student_t_two_sided(t, df),
    })
}

/// Pearson chi-square test of independence on an r×c table (no continuity correction).
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<TestResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::domain("contingency table must be rectangular and at least 2x2"));
    }
    if table.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::domain("contingency counts must be finite and non-negative"));
    }
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut chi2 = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_sums[i] * col_sums[j] / total;
            if !(expected > 0.0) {
                return Err(Error::domain(format!("expected count in cell ({i},{j}) is zero")));
            }
            chi2 += (table[i][j] - expected).powi(2) / expected;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    Ok(TestResult {
        statistic: chi2,
        df: Df::Single(df),
        p_value: chi_square_sf(chi2, df),
    })
}

/// Counts of `(row code, column code)` pairs; codes are mapped to table
/// positions in ascending order.
pub fn contingency(rows: &[i64], cols: &[i64]) -> (Vec<i64>, Vec<i64>, Vec<Vec<f64>>) {
    let mut rk: Vec<i64> = rows.to_vec();
    rk.sort_unstable();
    rk.dedup();
    let mut ck: Vec<i64> = cols.to_vec();
    ck.sort_unstable();
    ck.dedup();
    let mut table = vec![vec![0.0; ck.len()]; rk.len()];
    for (&a, &b) in rows.iter().zip(cols) {
        let i = rk.binary_search(&a).unwrap();
        let j = ck.binary_search(&b).unwrap();
        table[i][j] += 1.0;
    }
    (rk, ck, table)
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::domain("ANOVA needs at least 2 groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::domain("ANOVA needs at least 2 values per group"));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    if !(ssw > 0.0) {
        return Err(Error::domain("ANOVA needs positive within-group variance"));
    }
    let (d1, d2) = ((k - 1) as f64, (n - k) as f64);
    let f = (ssb / d1) / (ssw / d2);
    Ok(TestResult {
        statistic: f,
        df: Df::Pair(d1, d2),
        p_value: f_sf(f, d1, d2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// `None` where a constant column makes the coefficient undefined.
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson_matrix(columns: &[Vec<f64>], labels: &[String]) -> Result<CorrelationMatrix> {
    let d = columns.len();
    if labels.len() != d {
        return Err(Error::domain("one label per column required"));
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::domain("correlation needs at least 2 rows in equal-length columns"));
    }
    let constant: Vec<bool> = columns.iter().map(|c| c.iter().all(|&v| v == c[0])).collect();
    let mut values = vec![vec![None; d]; d];
    for i in 0..d {
        if constant[i] {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in i + 1..d {
            if constant[j] {
                continue;
            }
            let r = pearson(&columns[i], &columns[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: labels.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioEstimate {
    pub feature: String,
    /// Log-odds change per unit of the feature.
    pub beta: f64,
    pub odds_ratio: f64,
    pub intercept: f64,
    pub converged: bool,
    /// Set when the classes are (quasi-)separated and the MLE does not exist.
    pub separation: Option<String>,
}

fn separated(x: &[f64], y: &[u8]) -> bool {
    let mut max0 = f64::NEG_INFINITY;
    let mut min0 = f64::INFINITY;
    let mut max1 = f64::NEG_INFINITY;
    let mut min1 = f64::INFINITY;
    for (&v, &t) in x.iter().zip(y) {
        if t == 1 {
            max1 = max1.max(v);
            min1 = min1.min(v);
        } else {
            max0 = max0.max(v);
            min0 = min0.min(v);
        }
    }
    max0 < min1 || max1 < min0
}

/// Logistic regression of `target` on the given columns. Columns are
/// z-scored for the optimizer and the coefficients mapped back to
/// per-unit scale.
pub fn odds_ratios(columns: &[Vec<f64>], names: &[String], target: &[u8]) -> Result<Vec<OddsRatioEstimate>> {
    let n = target.len();
    let d = columns.len();
    if d == 0 || names.len() != d || columns.iter().any(|c| c.len() != n) {
        return Err(Error::domain("odds ratios need named columns matching the target length"));
    }
    let pos = target.iter().filter(|&&t| t == 1).count();
    if pos == 0 || pos == n {
        return Err(Error::domain("odds ratio needs both classes in the target"));
    }
    let mut moments = Vec::with_capacity(d);
    let mut data = vec![0.0; n * d];
    for (j, c) in columns.iter().enumerate() {
        let m = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        if !(sd > 0.0) {
            return Err(Error::domain(format!("feature {} is constant", names[j])));
        }
        for (i, v) in c.iter().enumerate() {
            data[i * d + j] = (v - m) / sd;
        }
        moments.push((m, sd));
    }
    let x = Matrix::from_vec(n, d, data)?;
    let settings = GdSettings {
        step: 1.0,
        max_iter: 20_000,
        tol: 1e-15,
        ..GdSettings::default()
    };
    let model = fit_gradient_descent(&x, target, &settings);
    let mut intercept = model.intercept;
    for (w, (m, sd)) in model.weights.iter().zip(&moments) {
        intercept -= w * m / sd;
    }
    let separation = if d == 1 && separated(&columns[0], target) {
        Some("classes are perfectly separated by the feature; the slope diverges".to_string())
    } else if model.final_loss < 1e-6 {
        Some(format!("training loss {:.2e} indicates separation", model.final_loss))
    } else {
        None
    };
    Ok(model
        .weights
        .iter()
        .zip(&moments)
        .zip(names)
        .map(|((w, (_, sd)), name)| {
            let beta = w / sd;
            OddsRatioEstimate {
                feature: name.clone(),
                beta,
                odds_ratio: beta.exp(),
                intercept,
                converged: model.converged,
                separation: separation.clone(),
            }
        })
        .collect())
}

pub fn univariate_odds_ratio(feature: &str, values: &[f64], target: &[u8]) -> Result<OddsRatioEstimate> {
    let mut v = odds_ratios(&[values.to_vec()], &[feature.to_string()], target)?;
    Ok(v.remove(0))
}
