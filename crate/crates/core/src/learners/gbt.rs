//! Second-order gradient boosting with depth-wise trees on logistic loss.
//!
//! Each round computes per-row gradients `g = p − y` and hessians
//! `h = p(1 − p)` at the current raw score, then grows a tree whose split
//! gain is `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ` and whose leaf
//! weight is `−G/(H+λ)`, shrunk by the learning rate.

use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};
use super::tree::{midpoint, Node, Presorted, Tree};
use crate::frame::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtSettings {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl Default for GbtSettings {
    fn default() -> Self {
        GbtSettings {
            rounds: 300,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Log-odds of the training base rate.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss before round 1 and after each round.
    pub train_loss: Vec<f64>,
}

/// `ln(p / (1 − p))` of the positive rate.
pub fn base_log_odds(y: &[u8]) -> f64 {
    let p = y.iter().filter(|&&t| t == 1).count() as f64 / y.len() as f64;
    (p / (1.0 - p)).ln()
}

pub fn mean_log_loss(scores: &[f64], y: &[u8]) -> f64 {
    scores
        .iter()
        .zip(y)
        .map(|(&s, &t)| softplus(s) - t as f64 * s)
        .sum::<f64>()
        / scores.len() as f64
}

/// Newton leaf weight `−G/(H+λ)` (before shrinkage).
#[inline]
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        -g / den
    } else {
        0.0
    }
}

#[inline]
fn node_score(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        g * g / den
    } else {
        0.0
    }
}

/// Second-order split gain.
#[inline]
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (node_score(gl, hl, lambda) + node_score(gr, hr, lambda) - node_score(gl + gr, hl + hr, lambda)) - gamma
}

const NONE: u32 = u32::MAX;

struct Open {
    node: usize,
    depth: usize,
    g: f64,
    h: f64,
    count: usize,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows one regression tree on gradient statistics. Returns the tree
/// (leaf values already shrunk) and the leaf value reached by every row.
pub fn grow_newton_tree(
    x: &Matrix,
    presorted: &Presorted,
    grad: &[f64],
    hess: &[f64],
    settings: &GbtSettings,
) -> (Tree, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let lambda = settings.lambda;
    let mut node_of = vec![0u32; n];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut open = vec![Open {
        node: 0,
        depth: 0,
        g: grad.iter().sum(),
        h: hess.iter().sum(),
        count: n,
    }];
    let mut row_value = vec![0.0; n];

    while !open.is_empty() {
        let k_open = open.len();
        let splittable: Vec<bool> = open
            .iter()
            .map(|o| o.depth < settings.max_depth && o.count >= 2)
            .collect();
        let mut best: Vec<Option<Best>> = vec![None; k_open];
        if splittable.iter().any(|&s| s) {
            let mut gl = vec![0.0; k_open];
            let mut hl = vec![0.0; k_open];
            let mut cl = vec![0usize; k_open];
            let mut last = vec![f64::NAN; k_open];
            for j in 0..d {
                gl.iter_mut().for_each(|v| *v = 0.0);
                hl.iter_mut().for_each(|v| *v = 0.0);
                cl.iter_mut().for_each(|v| *v = 0);
                for (&r, &v) in presorted.order[j].iter().zip(&presorted.values[j]) {
                    let k = node_of[r as usize];
                    if k == NONE {
                        continue;
                    }
                    let k = k as usize;
                    if !splittable[k] {
                        continue;
                    }
                    if cl[k] > 0 && v > last[k] {
                        let o = &open[k];
                        let (gr, hr) = (o.g - gl[k], o.h - hl[k]);
                        if hl[k] >= settings.min_child_weight && hr >= settings.min_child_weight {
                            let gain = split_gain(gl[k], hl[k], gr, hr, lambda, settings.gamma);
                            if gain > 0.0 && best[k].is_none_or(|b| gain > b.gain) {
                                best[k] = Some(Best {
                                    gain,
                                    feature: j,
                                    threshold: midpoint(last[k], v),
                                });
                            }
                        }
                    }
                    let r = r as usize;
                    gl[k] += grad[r];
                    hl[k] += hess[r];
                    cl[k] += 1;
                    last[k] = v;
                }
            }
        }

        let mut next = Vec::new();
        let mut child_of: Vec<Option<(Best, u32)>> = vec![None; k_open];
        for k in 0..k_open {
            match best[k] {
                Some(b) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[open[k].node] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right: left + 1,
                    };
                    let li = next.len() as u32;
                    for node in [left, left + 1] {
                        next.push(Open {
                            node,
                            depth: open[k].depth + 1,
                            g: 0.0,
                            h: 0.0,
                            count: 0,
                        });
                    }
                    child_of[k] = Some((b, li));
                }
                None => {
                    let o = &open[k];
                    let value = settings.learning_rate * leaf_weight(o.g, o.h, lambda);
                    nodes[o.node] = Node::Leaf { value };
                }
            }
        }
        for (i, slot) in node_of.iter_mut().enumerate() {
            if *slot == NONE {
                continue;
            }
            let k = *slot as usize;
            match child_of[k] {
                Some((b, li)) => {
                    let c = if x.get(i, b.feature) <= b.threshold { li } else { li + 1 };
                    *slot = c;
                    let o = &mut next[c as usize];
                    o.g += grad[i];
                    o.h += hess[i];
                    o.count += 1;
                }
                None => {
                    if let Node::Leaf { value } = nodes[open[k].node] {
                        row_value[i] = value;
                    }
                    *slot = NONE;
                }
            }
        }
        open = next;
    }
    (Tree { nodes }, row_value)
}

pub fn fit_gbt(x: &Matrix, y: &[u8], settings: &GbtSettings) -> GbtModel {
    let n = x.rows();
    let presorted = Presorted::new(x);
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
        let (tree, step) = grow_newton_tree(x, &presorted, &grad, &hess, settings);
        for (s, v) in scores.iter_mut().zip(&step) {
            *s += v;
        }
        trees.push(tree);
        train_loss.push(mean_log_loss(&scores, y));
    }
    GbtModel {
        base_score,
        trees,
        train_loss,
    }
}

impl GbtModel {
    pub fn raw_scores(&self, x: &Matrix) -> Vec<f64> {
        self.raw_scores_at(x, self.trees.len())
    }

    /// Raw scores using only the first `rounds` trees.
    pub fn raw_scores_at(&self, x: &Matrix, rounds: usize) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                self.base_score + self.trees[..rounds].iter().map(|t| t.predict_row(row)).sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        self.raw_scores(x).into_iter().map(sigmoid).collect()
    }
}
