use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("ragged rows"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Train-fitted standardization of a subset of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    /// `(column index, mean, sd)` for each standardized column.
    pub columns: Vec<(usize, f64, f64)>,
}

impl Scaler {
    /// Fits mean and population SD on `train` rows only.
    pub fn fit(matrix: &Matrix, names: &[String], columns: &[usize], train: &[usize]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::domain("cannot fit scaler on zero training rows"));
        }
        let n = train.len() as f64;
        let mut out = Vec::with_capacity(columns.len());
        for &j in columns {
            let mean = train.iter().map(|&i| matrix.get(i, j)).sum::<f64>() / n;
            let var = train
                .iter()
                .map(|&i| (matrix.get(i, j) - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::domain(format!(
                    "column {} has zero standard deviation on training rows",
                    names.get(j).map_or("?", String::as_str)
                )));
            }
            out.push((j, mean, sd));
        }
        Ok(Scaler { columns: out })
    }

    pub fn identity() -> Self {
        Scaler { columns: Vec::new() }
    }

    pub fn apply(&self, matrix: &mut Matrix) {
        for i in 0..matrix.rows() {
            let row = matrix.row_mut(i);
            for &(j, mean, sd) in &self.columns {
                row[j] = (row[j] - mean) / sd;
            }
        }
    }
}

/// Block of indicator columns produced by one-hot encoding one categorical variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotGroup {
    pub name: String,
    /// Category codes in column order.
    pub levels: Vec<i64>,
    /// First column of the block; the block spans `levels.len()` columns.
    pub first_column: usize,
}

impl OneHotGroup {
    pub fn columns(&self) -> std::ops::Range<usize> {
        self.first_column..self.first_column + self.levels.len()
    }
}

/// Model-ready numeric matrix with its binary target and encoding metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub matrix: Matrix,
    pub column_names: Vec<String>,
    pub target: Vec<u8>,
    pub scaler: Scaler,
    pub categorical_map: Vec<OneHotGroup>,
    /// Set once the scaler has been applied; a second application is refused.
    pub standardized: bool,
}

impl FeatureFrame {
    /// Plain frame without scaler or categorical metadata.
    pub fn new(matrix: Matrix, column_names: Vec<String>, target: Vec<u8>) -> Result<Self> {
        if matrix.rows() != target.len() {
            return Err(Error::domain(format!(
                "{} rows but {} targets",
                matrix.rows(),
                target.len()
            )));
        }
        if matrix.cols() != column_names.len() {
            return Err(Error::domain(format!(
                "{} columns but {} names",
                matrix.cols(),
                column_names.len()
            )));
        }
        if let Some(t) = target.iter().find(|&&t| t > 1) {
            return Err(Error::domain(format!("target value {t} is not binary")));
        }
        Ok(FeatureFrame {
            matrix,
            column_names,
            target,
            scaler: Scaler::identity(),
            categorical_map: Vec::new(),
            standardized: false,
        })
    }

    /// Convenience constructor with generated column names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], target: Vec<u8>) -> Result<Self> {
        let matrix = Matrix::from_rows(rows)?;
        let names = (0..matrix.cols()).map(|j| format!("x{j}")).collect();
        Self::new(matrix, names, target)
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn positives(&self) -> usize {
        self.target.iter().filter(|&&t| t == 1).count()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.target.is_empty() {
            return 0.0;
        }
        self.positives() as f64 / self.target.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureFrame {
        FeatureFrame {
            matrix: self.matrix.select_rows(indices),
            column_names: self.column_names.clone(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            scaler: self.scaler.clone(),
            categorical_map: self.categorical_map.clone(),
            standardized: self.standardized,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Applies `scaler` in place; refuses frames that are already standardized.
    pub fn standardize_with(&mut self, scaler: &Scaler) -> Result<()> {
        if self.standardized {
            return Err(Error::domain("frame is already standardized"));
        }
        scaler.apply(&mut self.matrix);
        self.scaler = scaler.clone();
        self.standardized = true;
        Ok(())
    }

    /// Attribution units: one per one-hot group, one per remaining column.
    /// Units are ordered by their first column.
    pub fn feature_units(&self) -> Vec<(String, Vec<usize>)> {
        let mut units = Vec::new();
        let mut j = 0;
        while j < self.n_cols() {
            if let Some(g) = self.categorical_map.iter().find(|g| g.first_column == j) {
                units.push((g.name.clone(), g.columns().collect()));
                j += g.levels.len();
            } else {
                units.push((self.column_names[j].clone(), vec![j]));
                j += 1;
            }
        }
        units
    }
}
