//! Discrimination and calibration metrics for binary probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::decision_threshold;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_lengths(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} probabilities but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::domain("no samples to evaluate"));
    }
    Ok(())
}

/// Counts under the `prob >= threshold → positive` convention.
pub fn confusion(probs: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionMatrix> {
    check_lengths(probs, labels)?;
    let mut cm = ConfusionMatrix::default();
    for (pred, &y) in decision_threshold(probs, threshold).into_iter().zip(labels) {
        match (pred, y) {
            (1, 1) => cm.tp += 1,
            (1, _) => cm.fp += 1,
            (_, 1) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No predicted positives; precision reported as 0.
    pub precision_undefined: bool,
    /// No actual positives; recall reported as 0.
    pub recall_undefined: bool,
}

pub fn threshold_metrics(cm: &ConfusionMatrix) -> ThresholdMetrics {
    let total = cm.total() as f64;
    let accuracy = if total > 0.0 {
        (cm.tp + cm.tn) as f64 / total
    } else {
        0.0
    };
    let pred_pos = cm.tp + cm.fp;
    let actual_pos = cm.tp + cm.fn_;
    let precision = if pred_pos > 0 {
        cm.tp as f64 / pred_pos as f64
    } else {
        0.0
    };
    let recall = if actual_pos > 0 {
        cm.tp as f64 / actual_pos as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ThresholdMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_undefined: pred_pos == 0,
        recall_undefined: actual_pos == 0,
    }
}

/// Mid-ranks (1-based) with ties sharing their average rank.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mann–Whitney form of the ROC area: `(R⁺ − n⁺(n⁺+1)/2) / (n⁺·n⁻)`.
pub fn roc_auc(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(probs, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::domain("ROC AUC needs both classes"));
    }
    let ranks = average_ranks(probs);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// `(fpr, tpr)` points at every distinct score, from (0,0) to (1,1).
pub fn roc_points(probs: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    check_lengths(probs, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::domain("ROC curve needs both classes"));
    }
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let mut points = vec![(f64::INFINITY, 0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let s = probs[idx[i]];
        while i < idx.len() && probs[idx[i]] == s {
            if labels[idx[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((s, fp / n_neg, tp / n_pos));
    }
    Ok(points)
}

/// Mean squared gap between probability and outcome.
pub fn brier(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(probs, labels)?;
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p - y as f64).powi(2))
        .sum::<f64>()
        / probs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPoint {
    pub bin_low: f64,
    pub bin_high: f64,
    pub mean_confidence: f64,
    pub empirical_frequency: f64,
    pub count: u64,
}

/// Equal-width bin of `p`: `[0, 1/B]` for the first bin, `(k/B, (k+1)/B]` after.
pub fn bin_index(p: f64, n_bins: usize) -> usize {
    let scaled = p * n_bins as f64;
    let k = scaled.ceil() as isize - 1;
    k.clamp(0, n_bins as isize - 1) as usize
}

/// Per-bin confidence and frequency; empty bins are omitted.
pub fn reliability_curve(probs: &[f64], labels: &[u8], n_bins: usize) -> Result<Vec<ReliabilityPoint>> {
    check_lengths(probs, labels)?;
    if n_bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    let mut conf = vec![0.0; n_bins];
    let mut pos = vec![0u64; n_bins];
    let mut count = vec![0u64; n_bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let b = bin_index(p, n_bins);
        conf[b] += p;
        pos[b] += y as u64;
        count[b] += 1;
    }
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| ReliabilityPoint {
            bin_low: b as f64 / n_bins as f64,
            bin_high: (b + 1) as f64 / n_bins as f64,
            mean_confidence: conf[b] / count[b] as f64,
            empirical_frequency: pos[b] as f64 / count[b] as f64,
            count: count[b],
        })
        .collect())
}

/// Weighted mean |confidence − frequency| over reliability points.
pub fn ece_from_points(points: &[ReliabilityPoint]) -> f64 {
    let n: u64 = points.iter().map(|p| p.count).sum();
    points
        .iter()
        .map(|p| p.count as f64 / n as f64 * (p.mean_confidence - p.empirical_frequency).abs())
        .sum()
}

pub fn ece(probs: &[f64], labels: &[u8], n_bins: usize) -> Result<f64> {
    Ok(ece_from_points(&reliability_curve(probs, labels, n_bins)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: ThresholdMetrics,
    pub auc: f64,
    pub brier: f64,
    pub ece: f64,
    pub reliability_points: Vec<ReliabilityPoint>,
}

pub fn evaluate(probs: &[f64], labels: &[u8], threshold: f64, n_bins: usize) -> Result<EvalReport> {
    let cm = confusion(probs, labels, threshold)?;
    let points = reliability_curve(probs, labels, n_bins)?;
    Ok(EvalReport {
        confusion: cm,
        metrics: threshold_metrics(&cm),
        auc: roc_auc(probs, labels)?,
        brier: brier(probs, labels)?,
        ece: ece_from_points(&points),
        reliability_points: points,
    })
}
