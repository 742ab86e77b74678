use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cardio_core::learners::{LearnerKind, LearnerSpec};
use cardio_core::preprocess::CleaningRules;
use cardio_core::tuning::{Axis, Metric, SearchSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spaces::{default_grid, default_space, default_strategies, Strategy};

/// One experiment, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every other seed is derived from it unless set explicitly.
    pub seed: u64,
    pub data: DataConfig,
    #[serde(default)]
    pub cleaning: CleaningRules,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub learners: Vec<LearnerEntry>,
    #[serde(default)]
    pub tuning: TuningConfig,
    #[serde(default)]
    pub explain: ExplainConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Single-character override; sniffed from the header when absent.
    #[serde(default)]
    pub delimiter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub include_bmi: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { include_bmi: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: 0.8,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub ece_bins: usize,
    pub threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            ece_bins: 10,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerEntry {
    pub kind: String,
    /// Display name; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    /// Search strategies; `None` picks the kind's defaults, `[]` disables tuning.
    #[serde(default)]
    pub strategies: Option<Vec<String>>,
    /// Replaces the default space of the sampling strategies.
    #[serde(default)]
    pub space: Option<Vec<Axis>>,
    /// Replaces the default grid.
    #[serde(default)]
    pub grid: Option<Vec<Axis>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl LearnerEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub enabled: bool,
    pub folds: usize,
    pub metric: String,
    /// Stratified subsample of the training rows used for CV; 0 keeps all.
    pub subsample: usize,
    pub grid_cap: usize,
    pub random_budget: usize,
    pub bayes_budget: usize,
    pub bayes_initial: usize,
    pub pso_swarm: usize,
    pub pso_iterations: usize,
    pub seed: Option<u64>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            enabled: true,
            folds: 5,
            metric: "brier".into(),
            subsample: 12_000,
            grid_cap: 64,
            random_budget: 12,
            bayes_budget: 12,
            bayes_initial: 5,
            pso_swarm: 4,
            pso_iterations: 3,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub enabled: bool,
    pub metric: String,
    pub repeats: usize,
    /// Test rows used for permutation importance; 0 keeps all.
    pub rows: usize,
    pub background: usize,
    pub instances: usize,
    pub samples: usize,
    pub seed: Option<u64>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            enabled: true,
            metric: "auc".into(),
            repeats: 10,
            rows: 5000,
            background: 256,
            instances: 5,
            samples: 2048,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub density_samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("report"),
            density_samples: 5000,
        }
    }
}

/// A learner entry after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLearner {
    pub name: String,
    pub spec: LearnerSpec,
    pub strategies: Vec<Strategy>,
    pub space: SearchSpace,
    pub grid: SearchSpace,
}

/// splitmix64 finalizer, used to derive stream seeds from the root seed.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn salt_of(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn data_path(&self, base: &Path) -> PathBuf {
        base.join(&self.data.path)
    }

    pub fn output_dir(&self, base: &Path) -> PathBuf {
        base.join(&self.output.dir)
    }

    pub fn delimiter(&self) -> Result<Option<u8>, String> {
        match self.data.delimiter.as_deref() {
            None => Ok(None),
            Some(d) if d.len() == 1 && d.is_ascii() => Ok(Some(d.as_bytes()[0])),
            Some(d) => Err(format!(
                "data.delimiter must be a single ASCII character, got {d:?}"
            )),
        }
    }

    pub fn split_seed(&self) -> u64 {
        self.split
            .seed
            .unwrap_or_else(|| mix(self.seed, salt_of("split")))
    }

    pub fn tuning_seed(&self) -> u64 {
        self.tuning
            .seed
            .unwrap_or_else(|| mix(self.seed, salt_of("tuning")))
    }

    pub fn explain_seed(&self) -> u64 {
        self.explain
            .seed
            .unwrap_or_else(|| mix(self.seed, salt_of("explain")))
    }

    pub fn tuning_metric(&self) -> Result<Metric, String> {
        self.tuning
            .metric
            .parse()
            .map_err(|e| format!("tuning.metric: {e}"))
    }

    pub fn explain_metric(&self) -> Result<Metric, String> {
        self.explain
            .metric
            .parse()
            .map_err(|e| format!("explain.metric: {e}"))
    }

    /// Learners after name filtering, with specs and search spaces resolved.
    pub fn resolve_learners(
        &self,
        only: Option<&[String]>,
    ) -> Result<Vec<ResolvedLearner>, Vec<String>> {
        let mut errors = Vec::new();
        let mut out = Vec::new();
        for (i, entry) in self.learners.iter().enumerate() {
            let name = entry.display_name();
            if only.is_some_and(|names| !names.contains(&name)) {
                continue;
            }
            match resolve_entry(self, entry, i) {
                Ok(r) => out.push(r),
                Err(mut e) => errors.append(&mut e),
            }
        }
        if let Some(names) = only {
            for n in names {
                if !self.learners.iter().any(|e| &e.display_name() == n) {
                    errors.push(format!("--models: no learner named {n:?}"));
                }
            }
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(errors)
        }
    }

    /// Every problem with the configuration, in one pass.
    pub fn validate(
        &self,
        base: &Path,
        only: Option<&[String]>,
    ) -> Result<Vec<ResolvedLearner>, Vec<String>> {
        let mut errors = Vec::new();
        let path = self.data_path(base);
        if !path.is_file() {
            errors.push(format!("data.path: {} does not exist", path.display()));
        }
        if let Err(e) = self.delimiter() {
            errors.push(e);
        }
        if let Err(e) = self.cleaning.validate() {
            errors.push(format!("cleaning: {e}"));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            errors.push(format!(
                "split.ratio must lie in (0, 1), got {}",
                self.split.ratio
            ));
        }
        if self.metrics.ece_bins == 0 {
            errors.push("metrics.ece_bins must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.metrics.threshold) {
            errors.push(format!(
                "metrics.threshold must lie in [0, 1], got {}",
                self.metrics.threshold
            ));
        }
        if self.learners.is_empty() {
            errors.push("at least one [[learners]] entry is required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.learners {
            if !seen.insert(e.display_name()) {
                errors.push(format!("learner name {:?} is used twice", e.display_name()));
            }
        }
        let t = &self.tuning;
        if let Err(e) = self.tuning_metric() {
            errors.push(e);
        }
        if t.folds < 2 {
            errors.push(format!("tuning.folds must be at least 2, got {}", t.folds));
        }
        if t.random_budget == 0 || t.bayes_budget == 0 || t.pso_swarm == 0 || t.pso_iterations == 0
        {
            errors.push("tuning budgets, swarm size and iterations must be positive".into());
        }
        if t.bayes_budget <= t.bayes_initial || t.bayes_initial == 0 {
            errors.push(format!(
                "tuning.bayes_budget ({}) must exceed tuning.bayes_initial ({}) and both be positive",
                t.bayes_budget, t.bayes_initial
            ));
        }
        let x = &self.explain;
        if let Err(e) = self.explain_metric() {
            errors.push(e);
        }
        if x.repeats == 0 || x.samples == 0 {
            errors.push("explain.repeats and explain.samples must be positive".into());
        }
        if x.background < cardio_core::explain::MIN_BACKGROUND {
            errors.push(format!(
                "explain.background must be at least {}, got {}",
                cardio_core::explain::MIN_BACKGROUND,
                x.background
            ));
        }
        if self.output.density_samples == 0 || self.output.density_samples > 5000 {
            errors.push("output.density_samples must lie in 1..=5000".into());
        }
        let learners = match self.resolve_learners(only) {
            Ok(l) => l,
            Err(mut e) => {
                errors.append(&mut e);
                Vec::new()
            }
        };
        if errors.is_empty() {
            Ok(learners)
        } else {
            Err(errors)
        }
    }

    /// SHA-256 of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(out) = value.get_mut("output").and_then(|o| o.as_object_mut()) {
            out.remove("dir");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

fn resolve_entry(
    config: &RunConfig,
    entry: &LearnerEntry,
    index: usize,
) -> Result<ResolvedLearner, Vec<String>> {
    let name = entry.display_name();
    let mut errors = Vec::new();
    let kind: LearnerKind = match entry.kind.parse() {
        Ok(k) => k,
        Err(e) => return Err(vec![format!("learner {name}: {e}")]),
    };
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        errors.push(format!(
            "learner name {name:?} must be non-empty [A-Za-z0-9_-]"
        ));
    }
    let seed = entry
        .seed
        .unwrap_or_else(|| mix(config.seed, salt_of(&name) ^ index as u64));
    let spec = LearnerSpec {
        kind,
        hyperparameters: entry.hyperparameters.clone(),
        seed,
    };
    if let Err(e) = spec.resolved() {
        errors.push(format!("learner {name}: {e}"));
    }
    let mut space_or_default =
        |custom: &Option<Vec<Axis>>, default: SearchSpace, what: &str| match custom {
            Some(axes) => SearchSpace::new(axes.clone()).unwrap_or_else(|e| {
                errors.push(format!("learner {name}: {what}: {e}"));
                SearchSpace { axes: Vec::new() }
            }),
            None => default,
        };
    let space = space_or_default(&entry.space, default_space(kind), "search space");
    let grid = space_or_default(&entry.grid, default_grid(kind), "grid");
    let names: Vec<String> = match &entry.strategies {
        Some(s) => s.clone(),
        None => default_strategies(kind)
            .iter()
            .map(|s| s.name().to_string())
            .collect(),
    };
    let mut strategies = Vec::new();
    for s in &names {
        match s.parse::<Strategy>() {
            Ok(st) => strategies.push(st),
            Err(e) => errors.push(format!("learner {name}: {e}")),
        }
    }
    for axis in space.axes.iter().chain(&grid.axes) {
        if !cardio_core::learners::hyperparameter_table(kind)
            .iter()
            .any(|h| h.name == axis.name)
        {
            errors.push(format!(
                "learner {name}: search axis {:?} is not a {kind} hyperparameter",
                axis.name
            ));
        }
    }
    if config.tuning.enabled {
        for st in &strategies {
            let s = if *st == Strategy::Grid { &grid } else { &space };
            if s.axes.is_empty() {
                continue;
            }
            if let Err(e) = st.check(s, &config.tuning) {
                errors.push(format!("learner {name}: {e}"));
            }
        }
    }
    if errors.is_empty() {
        Ok(ResolvedLearner {
            name,
            spec,
            strategies,
            space,
            grid,
        })
    } else {
        Err(errors)
    }
}
