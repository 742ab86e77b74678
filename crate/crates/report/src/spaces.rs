//! Default search spaces and strategy selection per learner kind.

use std::fmt;
use std::str::FromStr;

use cardio_core::learners::LearnerKind;
use cardio_core::tuning::{Axis, Scale, SearchSpace};

use crate::config::TuningConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    Grid,
    Random,
    Bayes,
    Pso,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Grid,
        Strategy::Random,
        Strategy::Bayes,
        Strategy::Pso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Grid => "grid",
            Strategy::Random => "random",
            Strategy::Bayes => "bayes",
            Strategy::Pso => "pso",
        }
    }

    /// Checks that `space` suits this strategy under the configured budgets.
    pub fn check(self, space: &SearchSpace, tuning: &TuningConfig) -> Result<(), String> {
        match self {
            Strategy::Grid => {
                let n = space.grid_size().map_err(|e| e.to_string())?;
                if n > tuning.grid_cap {
                    return Err(format!(
                        "grid has {n} configurations, over tuning.grid_cap = {}",
                        tuning.grid_cap
                    ));
                }
                Ok(())
            }
            Strategy::Random => Ok(()),
            Strategy::Bayes | Strategy::Pso => space
                .require_numeric(self.name())
                .map_err(|e| e.to_string()),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (grid, random, bayes, pso)"))
    }
}

pub fn default_strategies(kind: LearnerKind) -> &'static [Strategy] {
    match kind {
        LearnerKind::Logistic | LearnerKind::Knn | LearnerKind::Cart => &[Strategy::Grid],
        LearnerKind::RandomForest => &[Strategy::Random],
        LearnerKind::GbtLevelwise | LearnerKind::GbtOblivious => &Strategy::ALL,
    }
}

fn space(axes: Vec<Axis>) -> SearchSpace {
    SearchSpace::new(axes).expect("default space is valid")
}

/// Space sampled by random search, Bayesian optimization and PSO.
pub fn default_space(kind: LearnerKind) -> SearchSpace {
    match kind {
        LearnerKind::Logistic => space(vec![Axis::continuous("lambda", 1e-4, 10.0, Scale::Log)]),
        LearnerKind::Knn => space(vec![Axis::log_integer("k", 5, 201)]),
        LearnerKind::Cart => space(vec![
            Axis::integer("max_depth", 3, 14),
            Axis::log_integer("min_samples_leaf", 1, 200),
        ]),
        LearnerKind::RandomForest => space(vec![
            Axis::log_integer("n_trees", 50, 300),
            Axis::integer("max_depth", 6, 16),
            Axis::log_integer("min_samples_leaf", 1, 50),
            Axis::integer("max_features", 2, 8),
        ]),
        LearnerKind::GbtLevelwise => space(vec![
            Axis::log_integer("rounds", 50, 1000),
            Axis::continuous("learning_rate", 0.01, 0.3, Scale::Log),
            Axis::integer("max_depth", 3, 10),
            Axis::continuous("lambda", 0.5, 20.0, Scale::Log),
        ]),
        LearnerKind::GbtOblivious => space(vec![
            Axis::log_integer("rounds", 50, 1000),
            Axis::continuous("learning_rate", 0.01, 0.3, Scale::Log),
            Axis::integer("depth", 3, 10),
            Axis::continuous("lambda", 1.0, 20.0, Scale::Log),
        ]),
    }
}

/// Finite grid used by grid search.
pub fn default_grid(kind: LearnerKind) -> SearchSpace {
    match kind {
        LearnerKind::Logistic => space(vec![Axis::categorical(
            "lambda",
            &[0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0],
        )]),
        LearnerKind::Knn => space(vec![Axis::categorical(
            "k",
            &[5.0, 11.0, 21.0, 41.0, 81.0, 151.0],
        )]),
        LearnerKind::Cart => space(vec![
            Axis::categorical("max_depth", &[4.0, 6.0, 8.0, 10.0, 12.0]),
            Axis::categorical("min_samples_leaf", &[1.0, 10.0, 50.0, 100.0]),
        ]),
        LearnerKind::RandomForest => space(vec![
            Axis::categorical("max_depth", &[8.0, 12.0, 16.0]),
            Axis::categorical("min_samples_leaf", &[1.0, 10.0]),
        ]),
        LearnerKind::GbtLevelwise => space(vec![
            Axis::categorical("rounds", &[100.0, 300.0]),
            Axis::categorical("learning_rate", &[0.03, 0.1]),
            Axis::categorical("max_depth", &[3.0, 5.0]),
        ]),
        LearnerKind::GbtOblivious => space(vec![
            Axis::categorical("rounds", &[200.0, 500.0]),
            Axis::categorical("learning_rate", &[0.03, 0.1]),
            Axis::categorical("depth", &[4.0, 6.0]),
        ]),
    }
}
