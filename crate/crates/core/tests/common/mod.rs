#![allow(dead_code)]

use cardio_core::{FeatureFrame, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows with a noisy linear signal on the first two columns.
pub fn noisy_frame(n: usize, d: usize, seed: u64) -> FeatureFrame {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let z = 1.5 * row[0] - row[1.min(d - 1)] + r.gen_range(-1.0..1.0);
        y.push((z > 0.0) as u8);
        rows.push(row);
    }
    ensure_both_classes(&mut y);
    FeatureFrame::from_rows(&rows, y).unwrap()
}

/// Small-integer features so thresholds tie often.
pub fn integer_fixture(n: usize, d: usize, levels: i32, seed: u64) -> (Matrix, Vec<u8>) {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.gen_range(0..levels) as f64).collect())
        .collect();
    let y: Vec<u8> = (0..n).map(|_| r.gen_range(0..2u8)).collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

pub fn ensure_both_classes(y: &mut [u8]) {
    if y.iter().all(|&v| v == y[0]) {
        y[0] = 1 - y[0];
    }
}
