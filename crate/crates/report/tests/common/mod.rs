#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use cardio_core::ingest::write_csv;
use cardio_report::synthetic::synthetic_cohort;
use cardio_report::RunConfig;

/// Small, fast experiment over four learners with every search strategy
/// exercised on one of them.
pub const FIXTURE_CONFIG: &str = r#"
seed = 7

[data]
path = "cohort.csv"

[split]
ratio = 0.8

[[learners]]
kind = "logistic"

[[learners]]
kind = "knn"
hyperparameters = { k = 7 }

[[learners]]
kind = "cart"
hyperparameters = { max_depth = 4 }
strategies = []

[[learners]]
kind = "gbt_oblivious"
hyperparameters = { rounds = 30, depth = 3 }
strategies = ["grid", "random", "bayes", "pso"]
grid = [{ name = "learning_rate", kind = "categorical", values = [0.05, 0.2] }]
space = [
  { name = "rounds", kind = "integer", min = 10, max = 40 },
  { name = "learning_rate", kind = "continuous", min = 0.02, max = 0.3, scale = "log" },
]

[tuning]
folds = 3
random_budget = 3
bayes_budget = 6
bayes_initial = 5
pso_swarm = 2
pso_iterations = 2

[explain]
repeats = 2
rows = 0
background = 32
instances = 2
samples = 64

[output]
dir = "out"
density_samples = 60
"#;

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    /// Writes a synthetic cohort of `rows` rows and the fixture config.
    pub fn new(rows: usize) -> Self {
        Self::with_config(rows, FIXTURE_CONFIG)
    }

    pub fn with_config(rows: usize, config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut buf = Vec::new();
        write_csv(&synthetic_cohort(rows, 11), b';', &mut buf).unwrap();
        fs::write(dir.path().join("cohort.csv"), buf).unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Fixture { dir }
    }

    pub fn base(&self) -> &Path {
        self.dir.path()
    }

    pub fn config_path(&self) -> PathBuf {
        self.dir.path().join("run.toml")
    }

    pub fn config(&self) -> RunConfig {
        RunConfig::load(&self.config_path()).unwrap()
    }

    pub fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.dir.path().join(rel)).unwrap()
    }
}

pub fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    cardio_report::tables::parse_csv_table(text).unwrap()
}
