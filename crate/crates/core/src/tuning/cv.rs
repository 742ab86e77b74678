use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FeatureFrame;
use crate::learners::{fit, LearnerSpec};
use crate::metrics;
use crate::preprocess::SplitPair;

/// Scoring rule; loss metrics are negated so that higher is always better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    F1,
    Auc,
    Brier,
    Ece,
}

pub const ECE_BINS: usize = 10;

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Auc => "auc",
            Metric::Brier => "brier",
            Metric::Ece => "ece",
        }
    }

    /// Score with the sign convention above, threshold 0.5.
    pub fn score(self, probs: &[f64], labels: &[u8]) -> Result<f64> {
        Ok(match self {
            Metric::Accuracy | Metric::F1 => {
                let m = metrics::threshold_metrics(&metrics::confusion(probs, labels, 0.5)?);
                if self == Metric::Accuracy {
                    m.accuracy
                } else {
                    m.f1
                }
            }
            Metric::Auc => metrics::roc_auc(probs, labels)?,
            Metric::Brier => -metrics::brier(probs, labels)?,
            Metric::Ece => -metrics::ece(probs, labels, ECE_BINS)?,
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "f1" => Ok(Metric::F1),
            "auc" => Ok(Metric::Auc),
            "brier" => Ok(Metric::Brier),
            "ece" => Ok(Metric::Ece),
            other => Err(Error::config(format!(
                "unknown metric {other:?} (accuracy, f1, auc, brier, ece)"
            ))),
        }
    }
}

/// Per-class shuffle dealt round-robin into `k` folds, each class starting
/// at fold 0, so fold class counts differ by at most one per class.
pub fn stratified_kfold(target: &[u8], k: usize, seed: u64) -> Result<Vec<SplitPair>> {
    if k < 2 {
        return Err(Error::domain(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; target.len()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..target.len()).filter(|&i| target[i] == class).collect();
        if idx.len() < k {
            return Err(Error::domain(format!(
                "class {class} has {} rows, fewer than k = {k}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (t, i) in idx.into_iter().enumerate() {
            fold_of[i] = t % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..target.len()).partition(|&i| fold_of[i] == f);
            SplitPair {
                train_indices: train,
                test_indices: test,
                seed,
            }
        })
        .collect())
}

/// Mean and sample SD of per-fold scores.
pub fn mean_sd(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-fold scores of `spec` fitted on each training fold.
pub fn cv_fold_scores(spec: &LearnerSpec, frame: &FeatureFrame, folds: &[SplitPair], metric: Metric) -> Result<Vec<f64>> {
    folds
        .par_iter()
        .enumerate()
        .map(|(f, pair)| {
            let run = || -> Result<f64> {
                let model = fit(spec, &frame.subset(&pair.train_indices))?;
                let test = frame.subset(&pair.test_indices);
                let probs = model.predict_proba(&test)?;
                metric.score(&probs, &test.target)
            };
            run().map_err(|e| Error::Fold {
                fold: f,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn cv_score(spec: &LearnerSpec, frame: &FeatureFrame, folds: &[SplitPair], metric: Metric) -> Result<(f64, f64)> {
    Ok(mean_sd(&cv_fold_scores(spec, frame, folds, metric)?))
}
