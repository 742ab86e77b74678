use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frame::Matrix;

/// Stored training rows; probability is the positive fraction among the k
/// nearest rows by Euclidean distance, distance ties going to the lower row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub train: Matrix,
    pub target: Vec<u8>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[u8], k: usize) -> Self {
        KnnModel {
            k,
            train: x.clone(),
            target: y.to_vec(),
        }
    }

    pub fn predict_row(&self, row: &[f64], scratch: &mut Vec<(f64, u32)>) -> f64 {
        scratch.clear();
        for i in 0..self.train.rows() {
            let d2: f64 = self
                .train
                .row(i)
                .iter()
                .zip(row)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            scratch.push((d2, i as u32));
        }
        let k = self.k.min(scratch.len());
        let cmp = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, cmp);
        }
        let pos = scratch[..k]
            .iter()
            .filter(|&&(_, i)| self.target[i as usize] == 1)
            .count();
        pos as f64 / k as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| self.predict_row(x.row(i), scratch))
            .collect()
    }
}
