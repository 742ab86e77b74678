//! Gini classification trees grown level by level over presorted columns.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! of the rows reaching a node; a row goes left when `x <= threshold`.
//! Split quality is compared in exact integer arithmetic on the weighted
//! class counts, so equal-gain candidates are genuine ties and the
//! tie-break (lowest feature index, then lowest threshold) is exact.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frame::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
#[inline]
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) * 0.5;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Row indices of every column sorted by value (ties by row index), with
/// the sorted values alongside.
#[derive(Debug, Clone)]
pub struct Presorted {
    pub order: Vec<Vec<u32>>,
    pub values: Vec<Vec<f64>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let mut order = Vec::with_capacity(x.cols());
        let mut values = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            values.push(idx.iter().map(|&i| col[i as usize]).collect());
            order.push(idx);
        }
        Presorted { order, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartSettings {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` evaluates every feature.
    pub max_features: Option<usize>,
}

/// Exact split score `(pL²+qL²)/nL + (pR²+qR²)/nR` as a fraction.
/// Maximizing it minimizes the weighted Gini impurity of the children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GiniScore {
    pub num: u128,
    pub den: u128,
}

impl GiniScore {
    pub fn new(left_pos: u64, left_n: u64, right_pos: u64, right_n: u64) -> Self {
        let sq = |p: u64, n: u64| {
            let q = n - p;
            (p as u128) * (p as u128) + (q as u128) * (q as u128)
        };
        GiniScore {
            num: sq(left_pos, left_n) * right_n as u128 + sq(right_pos, right_n) * left_n as u128,
            den: left_n as u128 * right_n as u128,
        }
    }

    #[inline]
    pub fn beats(&self, other: &GiniScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

const NONE: u32 = u32::MAX;

struct Open {
    node: usize,
    depth: usize,
    pos: u64,
    tot: u64,
}

#[derive(Clone, Copy)]
struct Best {
    score: GiniScore,
    feature: usize,
    threshold: f64,
}

/// Fits a single tree with unit weights on all rows.
pub fn fit_cart(x: &Matrix, y: &[u8], settings: &CartSettings) -> Tree {
    let presorted = Presorted::new(x);
    let weights = vec![1u32; x.rows()];
    grow_tree(x, y, &presorted, &weights, settings, &mut ChaCha8Rng::seed_from_u64(0))
}

/// Grows one tree over rows with positive `weights` (bootstrap
/// multiplicities). `rng` is consulted only when `max_features` is set
/// below the column count.
pub fn grow_tree<R: Rng>(
    x: &Matrix,
    y: &[u8],
    presorted: &Presorted,
    weights: &[u32],
    settings: &CartSettings,
    rng: &mut R,
) -> Tree {
    let d = x.cols();
    let min_leaf = settings.min_samples_leaf.max(1) as u64;
    let subsample = settings.max_features.filter(|&m| m < d);

    let mut node_of = vec![NONE; x.rows()];
    let (mut pos, mut tot) = (0u64, 0u64);
    for (i, &w) in weights.iter().enumerate() {
        if w > 0 {
            node_of[i] = 0;
            tot += w as u64;
            pos += w as u64 * y[i] as u64;
        }
    }
    let mut nodes = vec![Node::Leaf {
        value: if tot > 0 { pos as f64 / tot as f64 } else { 0.0 },
    }];
    if tot == 0 {
        return Tree { nodes };
    }
    let mut open = vec![Open {
        node: 0,
        depth: 0,
        pos,
        tot,
    }];

    while !open.is_empty() {
        let k_open = open.len();
        let splittable: Vec<bool> = open
            .iter()
            .map(|o| o.depth < settings.max_depth && o.pos > 0 && o.pos < o.tot && o.tot >= 2 * min_leaf)
            .collect();
        // uses[k * d + j]: node k considers feature j
        let mut uses = vec![false; k_open * d];
        for k in 0..k_open {
            if !splittable[k] {
                continue;
            }
            match subsample {
                Some(m) => {
                    for j in sample(rng, d, m).into_iter() {
                        uses[k * d + j] = true;
                    }
                }
                None => uses[k * d..(k + 1) * d].iter_mut().for_each(|u| *u = true),
            }
        }

        let mut best: Vec<Option<Best>> = vec![None; k_open];
        let mut left_pos = vec![0u64; k_open];
        let mut left_tot = vec![0u64; k_open];
        let mut last = vec![f64::NAN; k_open];
        for j in 0..d {
            if !(0..k_open).any(|k| uses[k * d + j]) {
                continue;
            }
            left_pos.iter_mut().for_each(|v| *v = 0);
            left_tot.iter_mut().for_each(|v| *v = 0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            let order = &presorted.order[j];
            let vals = &presorted.values[j];
            for (&r, &v) in order.iter().zip(vals) {
                let k = node_of[r as usize];
                if k == NONE {
                    continue;
                }
                let k = k as usize;
                if !uses[k * d + j] {
                    continue;
                }
                let lt = left_tot[k];
                if lt > 0 && v > last[k] {
                    let o = &open[k];
                    let rt = o.tot - lt;
                    if lt >= min_leaf && rt >= min_leaf {
                        let lp = left_pos[k];
                        let score = GiniScore::new(lp, lt, o.pos - lp, rt);
                        if best[k].is_none_or(|b| score.beats(&b.score)) {
                            best[k] = Some(Best {
                                score,
                                feature: j,
                                threshold: midpoint(last[k], v),
                            });
                        }
                    }
                }
                let w = weights[r as usize] as u64;
                left_tot[k] += w;
                left_pos[k] += w * y[r as usize] as u64;
                last[k] = v;
            }
        }

        // materialize splits; children become the next frontier
        let mut next = Vec::new();
        let mut child_of: Vec<Option<(Best, u32, u32)>> = vec![None; k_open];
        for k in 0..k_open {
            let Some(b) = best[k].filter(|_| splittable[k]) else {
                continue;
            };
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
                    pos: 0,
                    tot: 0,
                });
            }
            child_of[k] = Some((b, li, li + 1));
        }
        for (i, slot) in node_of.iter_mut().enumerate() {
            if *slot == NONE {
                continue;
            }
            match child_of[*slot as usize] {
                Some((b, l, r)) => {
                    let c = if x.get(i, b.feature) <= b.threshold { l } else { r };
                    *slot = c;
                    let w = weights[i] as u64;
                    next[c as usize].tot += w;
                    next[c as usize].pos += w * y[i] as u64;
                }
                None => *slot = NONE,
            }
        }
        for o in &next {
            nodes[o.node] = Node::Leaf {
                value: o.pos as f64 / o.tot as f64,
            };
        }
        open = next;
    }
    Tree { nodes }
}
