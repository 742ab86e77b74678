use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, CartSettings, Presorted, Tree};
use crate::frame::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub tree: CartSettings,
    pub bootstrap: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

/// Per-tree seed; trees are independent of build order and thread count.
fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn fit_forest(x: &Matrix, y: &[u8], settings: &ForestSettings) -> ForestModel {
    let n = x.rows();
    let presorted = Presorted::new(x);
    let trees = (0..settings.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(settings.seed, t));
            let mut weights = vec![0u32; n];
            if settings.bootstrap {
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1);
            }
            grow_tree(x, y, &presorted, &weights, &settings.tree, &mut rng)
        })
        .collect();
    ForestModel { trees }
}

impl ForestModel {
    /// Mean of the trees' leaf probabilities.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k
            })
            .collect()
    }
}
