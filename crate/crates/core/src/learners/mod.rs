//! Six classifiers behind one fit / predict contract.
//!
//! | kind            | model                                                        |
//! |-----------------|--------------------------------------------------------------|
//! | `logistic`      | L2 logistic regression, gradient descent                     |
//! | `knn`           | k nearest neighbours, Euclidean, vote fraction               |
//! | `cart`          | Gini decision tree, exact midpoint thresholds                |
//! | `random_forest` | bagged CART with per-split feature subsampling               |
//! | `gbt_levelwise` | Newton boosting of depth-wise trees, second-order split gain |
//! | `gbt_oblivious` | Newton boosting of oblivious trees + ordered target stats    |
//!
//! Hyperparameters are a flat name → number map; every kind declares its
//! names, defaults and bounds in [`hyperparameter_table`]. Unknown names
//! and out-of-bound values are rejected before any training starts.

pub mod forest;
pub mod gbt;
pub mod knn;
pub mod logistic;
pub mod oblivious;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FeatureFrame, Matrix};

pub use forest::ForestModel;
pub use gbt::GbtModel;
pub use knn::KnnModel;
pub use logistic::LogisticModel;
pub use oblivious::ObliviousModel;
pub use tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    Knn,
    Cart,
    RandomForest,
    GbtLevelwise,
    GbtOblivious,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Logistic,
        LearnerKind::Knn,
        LearnerKind::Cart,
        LearnerKind::RandomForest,
        LearnerKind::GbtLevelwise,
        LearnerKind::GbtOblivious,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::Knn => "knn",
            LearnerKind::Cart => "cart",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::GbtLevelwise => "gbt_levelwise",
            LearnerKind::GbtOblivious => "gbt_oblivious",
        }
    }

    pub fn is_boosting(self) -> bool {
        matches!(self, LearnerKind::GbtLevelwise | LearnerKind::GbtOblivious)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown learner kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParam {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
}

const fn hp(name: &'static str, default: f64, min: f64, max: f64, integer: bool) -> HyperParam {
    HyperParam {
        name,
        default,
        min,
        max,
        integer,
    }
}

const LOGISTIC: &[HyperParam] = &[
    hp("lambda", 0.0, 0.0, 1e6, false),
    hp("step", 0.1, 1e-9, 100.0, false),
    hp("max_iter", 10_000.0, 1.0, 1e7, true),
    hp("tol", 1e-8, 0.0, 1.0, false),
];
const KNN: &[HyperParam] = &[hp("k", 15.0, 1.0, 1e7, true)];
const CART: &[HyperParam] = &[
    hp("max_depth", 8.0, 1.0, 64.0, true),
    hp("min_samples_leaf", 5.0, 1.0, 1e9, true),
];
const FOREST: &[HyperParam] = &[
    hp("n_trees", 200.0, 1.0, 10_000.0, true),
    hp("max_depth", 12.0, 1.0, 64.0, true),
    hp("min_samples_leaf", 1.0, 1.0, 1e9, true),
    // 0 selects floor(sqrt(d))
    hp("max_features", 0.0, 0.0, 1e6, true),
    hp("bootstrap", 1.0, 0.0, 1.0, true),
];
const GBT: &[HyperParam] = &[
    hp("rounds", 300.0, 1.0, 100_000.0, true),
    hp("learning_rate", 0.1, 1e-6, 1.0, false),
    hp("max_depth", 6.0, 1.0, 20.0, true),
    hp("lambda", 1.0, 0.0, 1e6, false),
    hp("gamma", 0.0, 0.0, 1e6, false),
    hp("min_child_weight", 1.0, 0.0, 1e6, false),
];
const OBLIVIOUS: &[HyperParam] = &[
    hp("rounds", 500.0, 1.0, 100_000.0, true),
    hp("learning_rate", 0.05, 1e-6, 1.0, false),
    hp("depth", 6.0, 1.0, 12.0, true),
    hp("lambda", 3.0, 0.0, 1e6, false),
    hp("ordered_ts", 1.0, 0.0, 1.0, true),
    hp("prior_weight", 1.0, 1e-9, 1e6, false),
];

/// Declared hyperparameters of a learner kind.
pub fn hyperparameter_table(kind: LearnerKind) -> &'static [HyperParam] {
    match kind {
        LearnerKind::Logistic => LOGISTIC,
        LearnerKind::Knn => KNN,
        LearnerKind::Cart => CART,
        LearnerKind::RandomForest => FOREST,
        LearnerKind::GbtLevelwise => GBT,
        LearnerKind::GbtOblivious => OBLIVIOUS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerSpec {
            kind,
            hyperparameters: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Full hyperparameter map with defaults filled in, after bounds checks.
    pub fn resolved(&self) -> Result<BTreeMap<String, f64>> {
        let table = hyperparameter_table(self.kind);
        for name in self.hyperparameters.keys() {
            if !table.iter().any(|h| h.name == name) {
                return Err(Error::config(format!(
                    "{}: unknown hyperparameter {name:?} (known: {})",
                    self.kind,
                    table.iter().map(|h| h.name).collect::<Vec<_>>().join(", ")
                )));
            }
        }
        let mut out = BTreeMap::new();
        for h in table {
            let v = self.hyperparameters.get(h.name).copied().unwrap_or(h.default);
            if !v.is_finite() || v < h.min || v > h.max {
                return Err(Error::config(format!(
                    "{}: {} = {v} outside [{}, {}]",
                    self.kind, h.name, h.min, h.max
                )));
            }
            if h.integer && v.fract() != 0.0 {
                return Err(Error::config(format!("{}: {} = {v} must be an integer", self.kind, h.name)));
            }
            out.insert(h.name.to_string(), v);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Cart(Tree),
    RandomForest(ForestModel),
    GbtLevelwise(GbtModel),
    GbtOblivious(ObliviousModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Gradient steps (logistic), trees (forest) or boosting rounds.
    pub rounds: usize,
    pub converged: bool,
    pub train_rows: usize,
}

/// A fitted model. Immutable after [`fit`]; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHandle {
    pub kind: LearnerKind,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub column_names: Vec<String>,
    pub params: ModelParams,
    pub meta: TrainingMeta,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format: String,
    version: u32,
    model: ModelHandle,
}

fn int(params: &BTreeMap<String, f64>, name: &str) -> usize {
    params[name] as usize
}

pub fn fit(spec: &LearnerSpec, train: &FeatureFrame) -> Result<ModelHandle> {
    let hp = spec.resolved()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::domain("cannot fit on an empty training frame"));
    }
    let pos = train.positives();
    if spec.kind != LearnerKind::Knn && (pos == 0 || pos == n) {
        return Err(Error::domain(format!(
            "{} needs both classes in the training data",
            spec.kind
        )));
    }
    let x = &train.matrix;
    let y = &train.target;
    let (params, meta) = match spec.kind {
        LearnerKind::Logistic => {
            let settings = logistic::GdSettings {
                lambda: hp["lambda"],
                step: hp["step"],
                max_iter: int(&hp, "max_iter"),
                tol: hp["tol"],
            };
            let m = logistic::fit_gradient_descent(x, y, &settings);
            let meta = TrainingMeta {
                rounds: m.iterations,
                converged: m.converged,
                train_rows: n,
            };
            (ModelParams::Logistic(m), meta)
        }
        LearnerKind::Knn => {
            let k = int(&hp, "k");
            if k > n {
                return Err(Error::config(format!("knn: k = {k} exceeds {n} training rows")));
            }
            let m = KnnModel::fit(x, y, k);
            (ModelParams::Knn(m), meta_done(1, n))
        }
        LearnerKind::Cart => {
            let settings = tree::CartSettings {
                max_depth: int(&hp, "max_depth"),
                min_samples_leaf: int(&hp, "min_samples_leaf"),
                max_features: None,
            };
            let t = tree::fit_cart(x, y, &settings);
            (ModelParams::Cart(t), meta_done(1, n))
        }
        LearnerKind::RandomForest => {
            let d = x.cols();
            let mf = int(&hp, "max_features");
            let max_features = if mf == 0 {
                ((d as f64).sqrt().floor() as usize).max(1)
            } else {
                mf.min(d)
            };
            let settings = forest::ForestSettings {
                n_trees: int(&hp, "n_trees"),
                tree: tree::CartSettings {
                    max_depth: int(&hp, "max_depth"),
                    min_samples_leaf: int(&hp, "min_samples_leaf"),
                    max_features: Some(max_features),
                },
                bootstrap: hp["bootstrap"] != 0.0,
                seed: spec.seed,
            };
            let m = forest::fit_forest(x, y, &settings);
            let t = m.trees.len();
            (ModelParams::RandomForest(m), meta_done(t, n))
        }
        LearnerKind::GbtLevelwise => {
            let settings = gbt::GbtSettings {
                rounds: int(&hp, "rounds"),
                learning_rate: hp["learning_rate"],
                max_depth: int(&hp, "max_depth"),
                lambda: hp["lambda"],
                gamma: hp["gamma"],
                min_child_weight: hp["min_child_weight"],
            };
            let m = gbt::fit_gbt(x, y, &settings);
            let r = m.trees.len();
            (ModelParams::GbtLevelwise(m), meta_done(r, n))
        }
        LearnerKind::GbtOblivious => {
            let settings = oblivious::ObliviousSettings {
                rounds: int(&hp, "rounds"),
                learning_rate: hp["learning_rate"],
                depth: int(&hp, "depth"),
                lambda: hp["lambda"],
                ordered_ts: hp["ordered_ts"] != 0.0,
                prior_weight: hp["prior_weight"],
                seed: spec.seed,
            };
            let m = oblivious::fit_oblivious(train, &settings)?;
            let r = m.trees.len();
            (ModelParams::GbtOblivious(m), meta_done(r, n))
        }
    };
    Ok(ModelHandle {
        kind: spec.kind,
        hyperparameters: hp,
        seed: spec.seed,
        column_names: train.column_names.clone(),
        params,
        meta,
    })
}

fn meta_done(rounds: usize, train_rows: usize) -> TrainingMeta {
    TrainingMeta {
        rounds,
        converged: true,
        train_rows,
    }
}

impl ModelHandle {
    /// Positive-class probabilities for every row of `rows`.
    pub fn predict_proba(&self, rows: &FeatureFrame) -> Result<Vec<f64>> {
        self.check_layout(&rows.column_names)?;
        Ok(self.predict_matrix(&rows.matrix))
    }

    /// Probability prediction on a bare matrix whose columns follow the
    /// training layout. Only the column count is checked.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        assert_eq!(x.cols(), self.column_names.len(), "column count mismatch");
        match &self.params {
            ModelParams::Logistic(m) => (0..x.rows()).map(|i| m.predict_row(x.row(i))).collect(),
            ModelParams::Knn(m) => m.predict(x),
            ModelParams::Cart(t) => (0..x.rows()).map(|i| t.predict_row(x.row(i))).collect(),
            ModelParams::RandomForest(m) => m.predict(x),
            ModelParams::GbtLevelwise(m) => m.predict(x),
            ModelParams::GbtOblivious(m) => m.predict(x),
        }
    }

    /// Additive raw scores (log-odds) for the boosting kinds and logistic.
    pub fn raw_scores(&self, rows: &FeatureFrame) -> Result<Vec<f64>> {
        self.check_layout(&rows.column_names)?;
        let x = &rows.matrix;
        match &self.params {
            ModelParams::Logistic(m) => Ok((0..x.rows()).map(|i| m.raw_score(x.row(i))).collect()),
            ModelParams::GbtLevelwise(m) => Ok(m.raw_scores(x)),
            ModelParams::GbtOblivious(m) => Ok(m.raw_scores(x)),
            _ => Err(Error::domain(format!("{} has no additive raw score", self.kind))),
        }
    }

    fn check_layout(&self, names: &[String]) -> Result<()> {
        if names.len() != self.column_names.len() {
            return Err(Error::ColumnMismatch(format!(
                "model expects {} columns, got {}",
                self.column_names.len(),
                names.len()
            )));
        }
        for (j, (a, b)) in self.column_names.iter().zip(names).enumerate() {
            if a != b {
                return Err(Error::ColumnMismatch(format!(
                    "column {j}: model expects {a:?}, got {b:?}"
                )));
            }
        }
        Ok(())
    }

    /// Versioned JSON; floats round-trip exactly.
    pub fn to_json(&self) -> Result<String> {
        let env = ModelEnvelope {
            format: "cardio-model".into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&env).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: ModelEnvelope =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if env.format != "cardio-model" || env.version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        Ok(env.model)
    }
}

/// Label 1 iff `prob >= threshold`.
pub fn decision_threshold(probs: &[f64], threshold: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= threshold)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_convention() {
        assert_eq!(decision_threshold(&[0.5], 0.5), vec![1]);
        assert_eq!(decision_threshold(&[0.0, 0.0], 0.5), vec![0, 0]);
        let p = [0.0, 0.3, 1.0];
        assert_eq!(decision_threshold(&p, 0.0), vec![1, 1, 1]);
        assert_eq!(decision_threshold(&p, 1.0), vec![0, 0, 1]);
    }

    #[test]
    fn hyperparameters_are_checked() {
        let bad = LearnerSpec::new(LearnerKind::GbtLevelwise).with("learning_rate", 2.0);
        assert!(matches!(bad.resolved(), Err(Error::Config(_))));
        let unknown = LearnerSpec::new(LearnerKind::Knn).with("depth", 3.0);
        assert!(matches!(unknown.resolved(), Err(Error::Config(_))));
        let frac = LearnerSpec::new(LearnerKind::Knn).with("k", 2.5);
        assert!(frac.resolved().is_err());
        let ok = LearnerSpec::new(LearnerKind::Cart).resolved().unwrap();
        assert_eq!(ok["max_depth"], 8.0);
        assert_eq!(ok["min_samples_leaf"], 5.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.name().parse::<LearnerKind>().unwrap(), k);
        }
    }
}
