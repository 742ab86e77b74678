//! Cross-validation and hyperparameter search.
//!
//! All strategies maximize. Objectives are plain closures returning a
//! `(mean, sd)` pair so the same optimizers serve CV scores and synthetic
//! test functions; wrap a minimization target by negating it.

mod bayes;
mod cv;
mod pso;
mod space;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FeatureFrame;
use crate::learners::LearnerSpec;
use crate::preprocess::SplitPair;

pub use bayes::{bayes_opt, expected_improvement, BayesSettings, GaussianProcess, LENGTHSCALES};
pub use cv::{cv_fold_scores, cv_score, mean_sd, stratified_kfold, Metric, ECE_BINS};
pub use pso::{pso_search, PsoSettings, Swarm};
pub use space::{format_config, Axis, Config, Domain, Scale, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub config: Config,
    /// Objective mean; `None` when the evaluation failed.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub strategy: String,
    pub budget: usize,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

impl TrialLog {
    pub fn new(strategy: &str, budget: usize, seed: u64) -> Self {
        TrialLog {
            strategy: strategy.to_string(),
            budget,
            seed,
            trials: Vec::new(),
        }
    }

    /// Best successful trial; ties go to the earliest.
    pub fn best(&self) -> Option<&Trial> {
        let mut best: Option<&Trial> = None;
        for t in &self.trials {
            if let Some(m) = t.mean {
                if best.is_none_or(|b| m > b.mean.unwrap()) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Running maximum after each trial (`-inf` before the first success).
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut cur = f64::NEG_INFINITY;
        self.trials
            .iter()
            .map(|t| {
                if let Some(m) = t.mean {
                    cur = cur.max(m);
                }
                cur
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.mean.is_none()).count()
    }

    pub fn total_seconds(&self) -> f64 {
        self.trials.iter().map(|t| t.seconds).sum()
    }

    /// Evaluates `config` and appends the trial. Non-finite means count as failures.
    pub(crate) fn record<F>(&mut self, config: Config, objective: &mut F) -> Option<f64>
    where
        F: FnMut(&Config) -> Result<(f64, f64)>,
    {
        let start = Instant::now();
        let outcome = objective(&config);
        let seconds = start.elapsed().as_secs_f64();
        let (mean, sd, error) = match outcome {
            Ok((m, s)) if m.is_finite() => (Some(m), Some(s), None),
            Ok((m, _)) => (None, None, Some(format!("non-finite objective {m}"))),
            Err(e) => (None, None, Some(e.to_string())),
        };
        self.trials.push(Trial {
            index: self.trials.len(),
            config,
            mean,
            sd,
            seconds,
            error,
        });
        mean
    }

    /// CSV with columns trial, config, mean, sd, seconds, error.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,config,mean,sd,seconds,error\n");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for t in &self.trials {
            out.push_str(&format!(
                "{},\"{}\",{},{},{:.6},\"{}\"\n",
                t.index,
                format_config(&t.config),
                opt(t.mean),
                opt(t.sd),
                t.seconds,
                t.error.as_deref().unwrap_or("").replace('"', "'")
            ));
        }
        out
    }
}

/// Objective that cross-validates `template` with each configuration's
/// hyperparameters overlaid. Folds are fixed for the whole search.
pub fn cv_objective<'a>(
    template: &'a LearnerSpec,
    frame: &'a FeatureFrame,
    folds: &'a [SplitPair],
    metric: Metric,
) -> impl FnMut(&Config) -> Result<(f64, f64)> + 'a {
    move |config| {
        let mut spec = template.clone();
        for (k, v) in config {
            spec.hyperparameters.insert(k.clone(), *v);
        }
        cv_score(&spec, frame, folds, metric)
    }
}

/// Exhaustive search over the grid, refusing products larger than `cap`.
pub fn grid_search<F>(space: &SearchSpace, cap: usize, mut objective: F) -> Result<TrialLog>
where
    F: FnMut(&Config) -> Result<(f64, f64)>,
{
    space.validate()?;
    let size = space.grid_size()?;
    if size > cap {
        return Err(Error::config(format!(
            "grid has {size} configurations, over the cap of {cap}"
        )));
    }
    let mut log = TrialLog::new("grid", size, 0);
    for config in space.grid()? {
        log.record(config, &mut objective);
    }
    Ok(log)
}

pub fn random_search<F>(space: &SearchSpace, budget: usize, seed: u64, mut objective: F) -> Result<TrialLog>
where
    F: FnMut(&Config) -> Result<(f64, f64)>,
{
    space.validate()?;
    if budget == 0 {
        return Err(Error::config("random search budget must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = TrialLog::new("random", budget, seed);
    for _ in 0..budget {
        let config = space.sample(&mut rng);
        log.record(config, &mut objective);
    }
    Ok(log)
}
