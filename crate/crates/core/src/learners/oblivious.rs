//! Newton boosting of oblivious trees, with ordered target statistics for
//! categorical columns.
//!
//! An oblivious tree applies one `(feature, threshold)` test per depth
//! level to every node of that level, so a tree of depth `D` is a lookup
//! table of `2^D` leaves indexed by the `D` test outcomes. The level test
//! maximizes the summed second-order score over all nodes of the level.
//!
//! One-hot groups from the frame's categorical map can be collapsed into
//! a single numeric column. During training row `i`'s value is
//! `(Σ_{j<i, same category} y_j + a·p) / (count_{j<i} + a)` where `j < i`
//! means "earlier in a seeded permutation", `p` is the training base rate
//! and `a` the prior weight. At prediction time the full training
//! statistics of the category are used.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbt::{base_log_odds, leaf_weight, mean_log_loss};
use super::logistic::sigmoid;
use super::tree::{midpoint, Presorted};
use crate::error::{Error, Result};
use crate::frame::{FeatureFrame, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliviousSettings {
    pub rounds: usize,
    pub learning_rate: f64,
    pub depth: usize,
    pub lambda: f64,
    pub ordered_ts: bool,
    pub prior_weight: f64,
    pub seed: u64,
}

impl Default for ObliviousSettings {
    fn default() -> Self {
        ObliviousSettings {
            rounds: 500,
            learning_rate: 0.05,
            depth: 6,
            lambda: 3.0,
            ordered_ts: true,
            prior_weight: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousTree {
    /// `(feature, threshold)` per level, root level first. Level `l`
    /// contributes bit `l` of the leaf index when `x > threshold`.
    pub splits: Vec<(usize, f64)>,
    pub leaves: Vec<f64>,
}

impl ObliviousTree {
    #[inline]
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        self.splits
            .iter()
            .enumerate()
            .fold(0, |acc, (l, &(f, t))| acc | (usize::from(row[f] > t) << l))
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.leaves[self.leaf_index(row)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub name: String,
    /// Source one-hot columns.
    pub first_column: usize,
    pub n_levels: usize,
    pub positive_sums: Vec<f64>,
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InternalColumn {
    Raw(usize),
    /// Target statistic of the category group at this index.
    Encoded(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousModel {
    pub base_score: f64,
    pub prior: f64,
    pub prior_weight: f64,
    pub layout: Vec<InternalColumn>,
    pub categories: Vec<CategoryStats>,
    pub trees: Vec<ObliviousTree>,
    pub train_loss: Vec<f64>,
}

/// Ordered target statistic of every row. `permutation[t]` is the row
/// visited at step `t`; each row only sees rows visited before it.
pub fn ordered_target_statistics(
    categories: &[usize],
    y: &[u8],
    n_levels: usize,
    prior: f64,
    prior_weight: f64,
    permutation: &[usize],
) -> Vec<f64> {
    let mut sums = vec![0.0; n_levels];
    let mut counts = vec![0.0; n_levels];
    let mut out = vec![0.0; categories.len()];
    for &i in permutation {
        let c = categories[i];
        out[i] = (sums[c] + prior_weight * prior) / (counts[c] + prior_weight);
        sums[c] += y[i] as f64;
        counts[c] += 1.0;
    }
    out
}

/// Category of each row of a one-hot block: the first column holding the maximum.
fn block_category(x: &Matrix, i: usize, first: usize, n_levels: usize) -> usize {
    let row = &x.row(i)[first..first + n_levels];
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

fn build_layout(frame: &FeatureFrame, use_ts: bool) -> (Vec<InternalColumn>, Vec<(String, usize, usize)>) {
    let mut layout = Vec::new();
    let mut groups = Vec::new();
    let mut j = 0;
    while j < frame.n_cols() {
        let g = frame.categorical_map.iter().find(|g| g.first_column == j);
        match g {
            Some(g) if use_ts => {
                layout.push(InternalColumn::Encoded(groups.len()));
                groups.push((g.name.clone(), g.first_column, g.levels.len()));
                j += g.levels.len();
            }
            _ => {
                layout.push(InternalColumn::Raw(j));
                j += 1;
            }
        }
    }
    (layout, groups)
}

impl ObliviousModel {
    fn encoded_value(&self, g: usize, category: usize) -> f64 {
        let s = &self.categories[g];
        (s.positive_sums[category] + self.prior_weight * self.prior) / (s.counts[category] + self.prior_weight)
    }

    /// Maps source rows to the internal layout using full training statistics.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let d = self.layout.len();
        let mut out = Matrix::zeros(x.rows(), d);
        for i in 0..x.rows() {
            for (k, col) in self.layout.iter().enumerate() {
                let v = match *col {
                    InternalColumn::Raw(j) => x.get(i, j),
                    InternalColumn::Encoded(g) => {
                        let s = &self.categories[g];
                        self.encoded_value(g, block_category(x, i, s.first_column, s.n_levels))
                    }
                };
                out.set(i, k, v);
            }
        }
        out
    }

    pub fn raw_scores(&self, x: &Matrix) -> Vec<f64> {
        let z = self.transform(x);
        (0..z.rows())
            .map(|i| {
                let row = z.row(i);
                self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        self.raw_scores(x).into_iter().map(sigmoid).collect()
    }
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        g * g / den
    } else {
        0.0
    }
}

/// Grows one oblivious tree; returns it with the leaf index of every row.
pub fn grow_oblivious_tree(
    x: &Matrix,
    presorted: &Presorted,
    grad: &[f64],
    hess: &[f64],
    depth: usize,
    lambda: f64,
    learning_rate: f64,
) -> (ObliviousTree, Vec<usize>) {
    let n = x.rows();
    let d = x.cols();
    let mut leaf_of = vec![0usize; n];
    let mut splits = Vec::with_capacity(depth);
    for level in 0..depth {
        let width = 1usize << level;
        let mut g = vec![0.0; width];
        let mut h = vec![0.0; width];
        for i in 0..n {
            g[leaf_of[i]] += grad[i];
            h[leaf_of[i]] += hess[i];
        }
        let mut best: Option<(f64, usize, f64)> = None;
        let mut gl = vec![0.0; width];
        let mut hl = vec![0.0; width];
        let mut part = vec![0.0; width];
        for j in 0..d {
            let vals = &presorted.values[j];
            if vals.first() == vals.last() {
                continue;
            }
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..width {
                part[k] = score(g[k], h[k], lambda);
            }
            let mut total: f64 = part.iter().sum();
            let mut last = vals[0];
            for (&r, &v) in presorted.order[j].iter().zip(vals) {
                if v > last {
                    if best.is_none_or(|(b, _, _)| total > b) {
                        best = Some((total, j, midpoint(last, v)));
                    }
                    last = v;
                }
                let r = r as usize;
                let k = leaf_of[r];
                gl[k] += grad[r];
                hl[k] += hess[r];
                let new = score(gl[k], hl[k], lambda) + score(g[k] - gl[k], h[k] - hl[k], lambda);
                total += new - part[k];
                part[k] = new;
            }
        }
        let Some((_, f, t)) = best else {
            break;
        };
        for i in 0..n {
            if x.get(i, f) > t {
                leaf_of[i] |= 1 << level;
            }
        }
        splits.push((f, t));
    }
    let width = 1usize << splits.len();
    let mut g = vec![0.0; width];
    let mut h = vec![0.0; width];
    for i in 0..n {
        g[leaf_of[i]] += grad[i];
        h[leaf_of[i]] += hess[i];
    }
    let leaves = (0..width)
        .map(|k| learning_rate * leaf_weight(g[k], h[k], lambda))
        .collect();
    (ObliviousTree { splits, leaves }, leaf_of)
}

pub fn fit_oblivious(train: &FeatureFrame, settings: &ObliviousSettings) -> Result<ObliviousModel> {
    let x = &train.matrix;
    let y = &train.target;
    let n = x.rows();
    if n == 0 {
        return Err(Error::domain("empty training frame"));
    }
    let prior = y.iter().filter(|&&t| t == 1).count() as f64 / n as f64;
    let (layout, groups) = build_layout(train, settings.ordered_ts);

    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(settings.seed));

    let mut categories = Vec::with_capacity(groups.len());
    let mut encoded_cols = Vec::with_capacity(groups.len());
    for (name, first, n_levels) in groups {
        let cats: Vec<usize> = (0..n).map(|i| block_category(x, i, first, n_levels)).collect();
        encoded_cols.push(ordered_target_statistics(
            &cats,
            y,
            n_levels,
            prior,
            settings.prior_weight,
            &permutation,
        ));
        let mut positive_sums = vec![0.0; n_levels];
        let mut counts = vec![0.0; n_levels];
        for (&c, &t) in cats.iter().zip(y) {
            positive_sums[c] += t as f64;
            counts[c] += 1.0;
        }
        categories.push(CategoryStats {
            name,
            first_column: first,
            n_levels,
            positive_sums,
            counts,
        });
    }

    let d = layout.len();
    let mut z = Matrix::zeros(n, d);
    for i in 0..n {
        for (k, col) in layout.iter().enumerate() {
            let v = match *col {
                InternalColumn::Raw(j) => x.get(i, j),
                InternalColumn::Encoded(g) => encoded_cols[g][i],
            };
            z.set(i, k, v);
        }
    }

    let presorted = Presorted::new(&z);
    let base_score = base_log_odds(y);
    let mut scores = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(settings.rounds);
    let mut train_loss = vec![mean_log_loss(&scores, y)];
    for _ in 0..settings.rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - y[i] as f64;
            hess[i] = p * (1.0 - p);
        }
        let (tree, leaf_of) = grow_oblivious_tree(
            &z,
            &presorted,
            &grad,
            &hess,
            settings.depth,
            settings.lambda,
            settings.learning_rate,
        );
        for (s, &k) in scores.iter_mut().zip(&leaf_of) {
            *s += tree.leaves[k];
        }
        trees.push(tree);
        train_loss.push(mean_log_loss(&scores, y));
    }
    Ok(ObliviousModel {
        base_score,
        prior,
        prior_weight: settings.prior_weight,
        layout,
        categories,
        trees,
        train_loss,
    })
}
